from .images import save_heightmap, montage
from .mesh import TerrainMesh, heightmap_to_mesh, save_mesh_obj

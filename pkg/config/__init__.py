from .init import get_config, get_yaml_config, reset_config, Config, ConfigLoader
from .presets import load_preset, list_presets, PRESET_NAMES

from .logging import get_logger, LoggerSetup
from .errors import (
    TerrainGANError,
    RasterFormatError,
    CorpusError,
    ModelSpecError,
    CheckpointError,
    LogFormatError,
    TrainingAbortedError,
)

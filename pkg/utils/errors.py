"""Exception hierarchy for the terrain GAN toolkit.

The CLI maps these onto exit codes; library code only raises them.
"""

from typing import Optional


class TerrainGANError(Exception):
    """Base class for every error raised by this package."""


class RasterFormatError(TerrainGANError, ValueError):
    """A raster, curve or transform could not be used as a heightmap input."""


class CorpusError(TerrainGANError, ValueError):
    """A tile corpus or its manifest is empty or malformed."""


class ModelSpecError(TerrainGANError, ValueError):
    """A network description is invalid or names an unsupported configuration."""


class CheckpointError(TerrainGANError, ValueError):
    """A checkpoint is missing, corrupt, or incompatible with the request."""


class LogFormatError(TerrainGANError, ValueError):
    """A training log file violates the long CSV format."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TrainingAbortedError(TerrainGANError, RuntimeError):
    """Training stopped because a loss became NaN or infinite."""

    def __init__(self, epoch: int, metric: str, value: float, stage: Optional[str] = None):
        self.epoch = epoch
        self.metric = metric
        self.value = value
        self.stage = stage
        where = f"stage {stage}, " if stage else ""
        super().__init__(f"non-finite {metric}={value} at {where}epoch {epoch}")

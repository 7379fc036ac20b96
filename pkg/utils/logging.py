"""Logging configuration for the terrain GAN toolkit."""

import sys
from pathlib import Path
from typing import Optional
from loguru import logger
from tqdm import tqdm


CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{extra[name]}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {extra[name]}:{function}:{line} - {message}"


def _tqdm_sink(message) -> None:
    # Route console output through tqdm so progress bars are not torn.
    tqdm.write(str(message), end="", file=sys.stderr)


class LoggerSetup:
    """Setup and configure logging for the application."""

    _initialized = False

    @classmethod
    def setup(
        cls,
        log_file: Optional[Path] = None,
        log_level: str = "INFO",
        rotation: str = "10 MB",
        retention: str = "7 days"
    ):
        """
        Setup logging configuration.

        Args:
            log_file: Path to log file (console only when None)
            log_level: Logging level
            rotation: Log rotation size
            retention: Log retention period
        """
        if cls._initialized:
            return

        logger.remove()
        logger.configure(extra={"name": "terrain_gan"})

        logger.add(
            _tqdm_sink,
            format=CONSOLE_FORMAT,
            level=log_level,
            colorize=True
        )

        if log_file:
            log_file = Path(log_file)
            log_file.parent.mkdir(parents=True, exist_ok=True)
            logger.add(
                log_file,
                format=FILE_FORMAT,
                level=log_level,
                rotation=rotation,
                retention=retention,
                compression="zip"
            )

        cls._initialized = True
        logger.bind(name=__name__).info(f"Logging initialized at level {log_level}")

    @classmethod
    def reset(cls):
        """Drop every sink so the next setup() call reconfigures from scratch."""
        logger.remove()
        cls._initialized = False

    @classmethod
    def get_logger(cls, name: str):
        """Get logger instance with specific name."""
        return logger.bind(name=name)


def get_logger(name: str):
    """Convenience function to get logger."""
    return LoggerSetup.get_logger(name)

"""Configuration loader for the terrain GAN toolkit."""

import os
import yaml
from pathlib import Path
from typing import Dict, Any, Optional
from dotenv import load_dotenv
from dataclasses import dataclass


@dataclass
class Config:
    """System configuration dataclass."""

    # Paths
    output_dir: Path
    presets_dir: Path
    log_file: Optional[Path]

    # Runtime
    device: str
    log_level: str

    # YAML Config
    yaml_config: Dict[str, Any]


class ConfigLoader:
    """Load and manage system configuration."""

    def __init__(self, config_path: str = "config/config.yaml", env_path: str = ".env"):
        """
        Initialize configuration loader.

        Args:
            config_path: Path to YAML config file, relative to the project root
            env_path: Path to .env file, relative to the project root
        """
        self.project_root = Path(__file__).parent.parent
        self.config_path = self.project_root / config_path
        self.env_path = self.project_root / env_path

        # Environment first so variables can override YAML values
        load_dotenv(self.env_path)

        self.yaml_config = self._load_yaml()
        self.config = self._create_config()

    def _load_yaml(self) -> Dict[str, Any]:
        """Load YAML configuration file."""
        if not self.config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self.config_path}")

        with open(self.config_path, 'r') as f:
            return yaml.safe_load(f) or {}

    def _create_config(self) -> Config:
        """Create Config object from environment and YAML."""
        paths = self.yaml_config.get('paths', {})
        logging_cfg = self.yaml_config.get('logging', {})
        training = self.yaml_config.get('training', {})

        log_file = os.getenv('LOG_FILE', logging_cfg.get('file'))
        presets_dir = Path(paths.get('presets_dir', 'config/presets'))
        if not presets_dir.is_absolute():
            presets_dir = self.project_root / presets_dir

        return Config(
            output_dir=Path(os.getenv('TERRAIN_GAN_OUTPUT_DIR', paths.get('output_dir', 'runs'))),
            presets_dir=presets_dir,
            log_file=Path(log_file) if log_file else None,
            device=os.getenv('TERRAIN_GAN_DEVICE', training.get('device', 'cpu')),
            log_level=os.getenv('LOG_LEVEL', logging_cfg.get('level', 'INFO')),
            yaml_config=self.yaml_config
        )

    def get(self) -> Config:
        """Get configuration object."""
        return self.config

    def get_yaml_section(self, section: str) -> Dict[str, Any]:
        """Get specific section from YAML config."""
        return dict(self.yaml_config.get(section, {}))


# Global config instance
_config_loader: Optional[ConfigLoader] = None


def _loader() -> ConfigLoader:
    global _config_loader
    if _config_loader is None:
        _config_loader = ConfigLoader()
    return _config_loader


def get_config() -> Config:
    """Get global configuration instance."""
    return _loader().get()


def get_yaml_config(section: str) -> Dict[str, Any]:
    """Get YAML configuration section."""
    return _loader().get_yaml_section(section)


def reset_config():
    """Forget the cached loader (used after environment changes)."""
    global _config_loader
    _config_loader = None

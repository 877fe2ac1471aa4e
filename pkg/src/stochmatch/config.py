import json
import logging
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional

from platformdirs import user_config_dir

logger = logging.getLogger(__name__)

APP_NAME = "stochmatch"
CONFIG_ENV_VAR = "STOCHMATCH_CONFIG_PATH"


@dataclass
class WorkbenchSettings:
    """Defaults shared by the library operations and the CLI."""

    trials: int = 100_000
    seed: int = 0
    workers: int = 1
    log_level: str = "INFO"
    lp_max_edges: int = 1000
    dp_max_states: int = 10_000_000
    recurrence_max_n: int = 5000
    audit_min_trials: int = 1000
    identity_tolerance: float = 1e-12
    chunk_size: int = 256

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for storage."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WorkbenchSettings":
        """Create from dictionary, ignoring unknown keys."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            logger.warning(f"Ignoring unknown settings keys: {', '.join(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})


def default_config_path() -> Path:
    """Resolve the settings file from the environment or the platform config dir."""
    env_path = os.environ.get(CONFIG_ENV_VAR)
    if env_path:
        return Path(env_path)
    return Path(user_config_dir(APP_NAME)) / "settings.json"


class SettingsStore:
    """Load and save workbench settings as JSON."""

    def __init__(self, config_path: Optional[Path] = None):
        """Initialize the store.

        Args:
            config_path: Path to the settings file. If None, uses
                $STOCHMATCH_CONFIG_PATH or the platform config directory.
        """
        self.config_path = Path(config_path) if config_path else default_config_path()
        self.settings = WorkbenchSettings()
        self.load()

    def load(self) -> None:
        """Load settings from file; a missing file keeps the defaults."""
        if not self.config_path.exists():
            return
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                data = json.load(f)
            self.settings = WorkbenchSettings.from_dict(data)
            logger.debug(f"Loaded settings from {self.config_path}")
        except (OSError, ValueError, TypeError) as e:
            logger.error(f"Error loading settings from {self.config_path}: {e}")
            self.settings = WorkbenchSettings()

    def save(self) -> None:
        """Save settings to file."""
        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.config_path, "w", encoding="utf-8") as f:
            json.dump(self.settings.to_dict(), f, indent=2)


_settings: Optional[WorkbenchSettings] = None


def get_settings() -> WorkbenchSettings:
    """Return the process-wide settings, loading them on first use."""
    global _settings
    if _settings is None:
        _settings = SettingsStore().settings
    return _settings


def use_settings(settings: Optional[WorkbenchSettings]) -> None:
    """Replace the process-wide settings; None forces a reload on next use."""
    global _settings
    _settings = settings

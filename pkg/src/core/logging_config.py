"""
Logging setup shared by the CLI and the entry script.
"""

import json
import logging
import logging.config
from pathlib import Path
from typing import Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DEFAULT_LOGGING_CONFIG = Path(__file__).resolve().parents[2] / "config" / "logging.json"


def configure_logging(level: str = "INFO", log_file: Optional[str] = None,
                      config_path: Path = DEFAULT_LOGGING_CONFIG) -> None:
    """Configure root logging from ``config/logging.json`` or a basic fallback."""
    level = level.upper()
    if config_path.is_file():
        with open(config_path, "r", encoding="utf-8") as f:
            config = json.load(f)
        config["loggers"][""]["level"] = level
        config["handlers"]["default"]["level"] = level
        logging.config.dictConfig(config)
    else:
        logging.basicConfig(level=level, format=LOG_FORMAT)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(log_file, mode="a", encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler.setLevel(level)
        logging.getLogger().addHandler(handler)

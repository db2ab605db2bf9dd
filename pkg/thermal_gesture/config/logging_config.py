import logging
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from thermal_gesture.config.settings import settings

_configured = False


def setup_logging(level: Optional[int] = None, log_dir: Optional[Path] = None) -> None:
    """Configure logging for the application"""
    global _configured
    if _configured:
        if level is not None:
            logging.getLogger().setLevel(level)
        return

    log_dir = log_dir or settings.LOG_DIR
    log_dir.mkdir(parents=True, exist_ok=True)

    if level is None:
        level = logging.DEBUG if settings.DEBUG else logging.INFO

    file_handler = logging.FileHandler(log_dir / "thermal_gesture.log")
    file_handler.setFormatter(logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    ))

    # stdout stays clean for reports; logs go to stderr
    console_handler = RichHandler(console=Console(stderr=True), show_path=False)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)
    _configured = True

    logger = logging.getLogger(__name__)
    logger.debug("Logging initialized")

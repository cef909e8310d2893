import logging
import sys
from pathlib import Path
from typing import Optional, Union

from config import LOG_FILE, LOG_LEVEL

# Create a custom logger
logger = logging.getLogger("PairTrust")


def setup_logging(log_file: Optional[Union[str, Path]] = LOG_FILE, level: Union[str, int] = LOG_LEVEL) -> None:
    """
    Configures the logging system for the entire application.
    Should be called once at application startup.

    Args:
        log_file: Where to mirror log records. None disables the file handler.
        level: Logging level name or number.
    """
    formatter = logging.Formatter(
        '%(asctime)s | %(levelname)s | %(name)s | %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Avoid adding duplicate handlers
    if root_logger.handlers:
        return

    # Stream Handler (stderr keeps stdout free for tables)
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    stream_handler.setLevel(level)
    root_logger.addHandler(stream_handler)

    if log_file is not None:
        try:
            log_path = Path(log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_path)
            file_handler.setFormatter(formatter)
            file_handler.setLevel(level)
            root_logger.addHandler(file_handler)
        except OSError as e:
            logger.warning(f"File logging disabled ({log_file}): {e}")

    logger.info("Logging system initialized.")


def log_event(event_type: str, details: str) -> None:
    """
    Logs a run event (start, config hash, output written) for provenance.

    Args:
        event_type: Category (e.g., 'RUN', 'CONFIG', 'OUTPUT').
        details: Description of the event.
    """
    clean_details = details.strip()
    logger.info(f"[{event_type.upper()}] {clean_details}")

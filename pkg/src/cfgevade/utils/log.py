import logging
from typing import Optional

LOG_FORMAT = '%(asctime)s - [cfgevade] - %(levelname)s - %(message)s'


def configure_logging(level: str = "INFO", log_file: Optional[str] = None):
    """
    Configures the root logger for command-line runs.
    Logs go to stderr so stdout stays clean for reports.
    """
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )

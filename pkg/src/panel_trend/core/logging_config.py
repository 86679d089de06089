import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

_logging_configured = False

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(command)-8s | %(name)-36s | %(message)s"


class _CommandFilter(logging.Filter):
    """Stamps every record with the sub-command that produced it."""

    def __init__(self, command: str):
        super().__init__()
        self.command = command

    def filter(self, record: logging.LogRecord) -> bool:
        record.command = self.command
        return True


def configure_logging(
    log_file: Optional[str] = "panel_trend.log",
    log_level: str = "INFO",
    max_bytes: int = 5 * 1024 * 1024,
    backup_count: int = 5,
    log_dir: str = "logs",
    command: str = "-",
) -> Optional[str]:
    """
    Configures console and rotating-file logging for one CLI run.

    Args:
        log_file: file name under log_dir, or None for console only.
        log_level: level name for the root logger.
        command: sub-command shown in every line, so interleaved runs in one log file stay readable.

    Returns:
        The log file path, or None when file logging is off.
    """
    global _logging_configured

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT, datefmt="%H:%M:%S")
    stamp = _CommandFilter(command)

    # stderr only; stdout carries the list of written files.
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    console_handler.setLevel(log_level)
    console_handler.addFilter(stamp)
    root_logger.addHandler(console_handler)

    log_path = None
    if log_file:
        os.makedirs(log_dir, exist_ok=True)
        log_path = os.path.join(log_dir, log_file)
        file_handler = RotatingFileHandler(log_path, maxBytes=max_bytes, backupCount=backup_count, encoding="utf-8")
        file_handler.setFormatter(formatter)
        file_handler.addFilter(stamp)
        root_logger.addHandler(file_handler)

    logging.getLogger("numexpr").setLevel(logging.WARNING)

    if not _logging_configured:
        root_logger.info(f"Logging configured | Level: {log_level} | File: {log_path or 'none'}")
        _logging_configured = True
    return log_path

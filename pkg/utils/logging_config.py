"""
Logging configuration module for Sparse Forge.
JSON and structured formatters, console logging on stderr and optional rotating log files.
"""
import json
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from config import config


class JSONFormatter(logging.Formatter):
    """One JSON object per record."""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            'timestamp': self.formatTime(record, self.datefmt),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }
        if record.exc_info:
            log_data['exception'] = self.formatException(record.exc_info)
        # set through logger.info(..., extra={'extra_fields': {...}})
        if hasattr(record, 'extra_fields'):
            log_data.update(record.extra_fields)
        return json.dumps(log_data, ensure_ascii=False, default=str)


class StructuredFormatter(logging.Formatter):
    """Human-readable single-line records."""

    def format(self, record: logging.LogRecord) -> str:
        line = (
            f"{self.formatTime(record, self.datefmt)} - "
            f"{record.levelname:8s} - "
            f"{record.name}:{record.lineno} - "
            f"{record.getMessage()}"
        )
        if record.exc_info:
            line += f"\n{self.formatException(record.exc_info)}"
        return line


def setup_logging(
    log_level: str = config.LOG_LEVEL,
    log_file: Optional[str] = config.LOG_FILE,
    log_dir: str = config.LOG_DIR,
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 5,
    use_json: bool = config.LOG_FORMAT.lower() == 'json'
) -> logging.Logger:
    """Configure the root logger for a CLI run.

    Console output goes to stderr so that stdout stays free for results.
    File handlers (all records, plus an errors-only file) are added only
    when a log file is given.

    Args:
        log_level: DEBUG, INFO, WARNING, ERROR or CRITICAL
        log_file: Log file name inside log_dir; None disables file logging
        log_dir: Directory for log files
        max_bytes: Rotation size
        backup_count: Rotated files kept
        use_json: JSON records instead of the structured format

    Returns:
        Configured root logger
    """
    level = getattr(logging, log_level.upper(), logging.INFO)
    logger = logging.getLogger()
    logger.setLevel(level)
    logger.handlers.clear()

    formatter: logging.Formatter = JSONFormatter() if use_json else StructuredFormatter(datefmt='%Y-%m-%d %H:%M:%S')

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)

        file_handler = RotatingFileHandler(
            log_path / log_file, maxBytes=max_bytes, backupCount=backup_count, encoding='utf-8'
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

        error_handler = RotatingFileHandler(
            log_path / 'error.log', maxBytes=max_bytes, backupCount=backup_count, encoding='utf-8'
        )
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(formatter)
        logger.addHandler(error_handler)

    return logger


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)

"""
Logging Utilities Module

This module provides centralized logging for the credal conformal toolkit.
It includes a factory function for creating configured logger instances with
console output and optional file output.

Console output goes to stderr so that commands can print machine-readable
JSON summaries on stdout without interleaving log lines.
"""

import logging
import sys
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def get_logger(name: str = "credal", log_file: Optional[str] = None,
               level: int = logging.INFO) -> logging.Logger:
    """
    Create and configure a logger instance with console and optional file output.

    Handlers are only attached the first time a given logger name is seen, so
    repeated calls never duplicate output.

    Args:
        name (str): The name of the logger. Defaults to "credal".
        log_file (Optional[str]): Path of a log file. No file handler when None.
        level (int): Logging level. Defaults to INFO.

    Returns:
        logging.Logger: A configured logger instance.
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    if not logger.handlers:
        formatter = logging.Formatter(LOG_FORMAT)

        stream_handler = logging.StreamHandler(sys.stderr)
        stream_handler.setFormatter(formatter)
        logger.addHandler(stream_handler)

        if log_file:
            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    return logger


def configure_logging(level: str = "INFO", log_file: Optional[str] = None) -> logging.Logger:
    """
    Configure the package root logger ("src") from settings values.

    Unlike get_logger, existing handlers are replaced, so each CLI invocation
    writes to the stderr that is current when it starts.
    """
    numeric_level = getattr(logging, str(level).upper(), logging.INFO)
    logger = logging.getLogger("src")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    return get_logger("src", log_file=log_file, level=numeric_level)

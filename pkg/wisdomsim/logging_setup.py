"""
Logging configuration for the command line
"""
import logging
from typing import IO, Optional

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
PACKAGE_LOGGER = "wisdomsim"

_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)
_handler: Optional[logging.Handler] = None


def configure_logging(verbosity: int = 0, stream: Optional[IO[str]] = None) -> logging.Handler:
    """
    Route wisdomsim logs to stderr (or `stream`)

    Each -v lowers the threshold one level: WARNING, INFO, DEBUG. Calling it
    again replaces the handler installed by the previous call.
    """
    global _handler
    reset_logging()
    level = _LEVELS[min(max(verbosity, 0), len(_LEVELS) - 1)]
    handler = logging.StreamHandler(stream)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    package_logger = logging.getLogger(PACKAGE_LOGGER)
    package_logger.addHandler(handler)
    package_logger.setLevel(level)
    _handler = handler
    return handler


def reset_logging() -> None:
    """Remove the handler installed by configure_logging and restore the default level"""
    global _handler
    package_logger = logging.getLogger(PACKAGE_LOGGER)
    if _handler is not None:
        package_logger.removeHandler(_handler)
        _handler = None
    package_logger.setLevel(logging.NOTSET)

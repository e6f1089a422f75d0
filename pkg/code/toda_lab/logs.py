import logging
import os

# ------------------ Area Loggers ------------------ #
# One logger per computational area, each writing its own log file.

LOG_FORMAT = '%(asctime)s %(levelname)s:%(message)s'
OUTPUT_DIR_ENV = "TODA_LAB_OUTPUT_DIR"

AREAS = (
    "numerics",
    "gutzwiller",
    "nlie",
    "yangyang",
    "quantize",
    "oper",
    "monodromy_algebra",
    "cli",
)

_configured = {}


def log_directory():
    return os.environ.get(OUTPUT_DIR_ENV) or os.getcwd()


def _attach(logger, area):
    formatter = logging.Formatter(LOG_FORMAT)
    handler = logging.FileHandler(os.path.join(log_directory(), f"{area}.log"), delay=True)
    handler.setLevel(logging.INFO)
    handler.setFormatter(formatter)
    logger.addHandler(handler)


def get_logger(area):
    if area not in AREAS:
        raise ValueError(f"Unknown logging area: {area}")
    logger = _configured.get(area)
    if logger is not None:
        return logger
    logger = logging.getLogger(f"toda_lab.{area}")
    logger.setLevel(logging.INFO)
    _attach(logger, area)
    _configured[area] = logger
    return logger


def reset_handlers():
    """Close every area's log file and reopen it in the current output directory."""
    for area, logger in _configured.items():
        for handler in list(logger.handlers):
            handler.close()
            logger.removeHandler(handler)
        _attach(logger, area)

""" Various utils. """

import logging
import os

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(levelname)s %(message)s",
    datefmt="%H:%M:%S",
)

THREADS_ENV_VAR = "SFS_THREADS"


def get_logger(handle: str) -> logging.Logger:
    """Get logger for handle.
    handle (str): Logger handle.
    RETURNS (logging.Logger): Logger.
    """

    return logging.getLogger(handle)


def get_thread_count() -> int:
    """Read the cap on worker threads from the SFS_THREADS environment variable.
    RETURNS (int): Number of worker threads, at least 1. Defaults to the CPU count.
    """
    default = os.cpu_count() or 1
    value = os.environ.get(THREADS_ENV_VAR)
    if not value:
        return default
    try:
        return max(1, int(value))
    except ValueError:
        get_logger(__name__).warning(
            "Ignoring %s=%r, expected an integer.", THREADS_ENV_VAR, value
        )
        return default

import os
import logging
from pathlib import Path
from typing import Generator

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Purpose: Central runtime configuration. Values come from the process environment,
# optionally seeded from a .env file in the project root. Example .env content:
# RFDDES_MATRIX_DIR=/data/matrices
# RFDDES_THREADS=4
# RFDDES_DENSE_CAP=5000
# RFDDES_LOG_LEVEL=DEBUG
if load_dotenv():
    logger.info(".env file loaded.")
else:
    logger.info("No .env file found, relying on system environment variables.")


def _int_from_env(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.error(f"{name}={raw!r} is not an integer.")
        raise ValueError(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        logger.error(f"{name}={value} is below the minimum {minimum}.")
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


MATRIX_DIR = Path(os.getenv("RFDDES_MATRIX_DIR", "matrices"))
THREADS = _int_from_env("RFDDES_THREADS", 1)
DENSE_CAP = _int_from_env("RFDDES_DENSE_CAP", 5000)
LOG_LEVEL = os.getenv("RFDDES_LOG_LEVEL", "INFO").upper()

logger.info(f"Matrix store: {MATRIX_DIR}, threads: {THREADS}, dense cap: {DENSE_CAP}")


def get_repository() -> Generator["MatrixRepository", None, None]:
    """FastAPI dependency that provides the matrix repository rooted at MATRIX_DIR."""
    # Local import: repositories -> sparse_core -> settings.
    from repositories import MatrixRepository

    yield MatrixRepository(MATRIX_DIR)

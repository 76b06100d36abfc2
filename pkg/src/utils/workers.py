"""
Worker pool setup for running independent cases concurrently.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


def thread_count():
    """
    Pool size from QCS_THREADS, defaulting to the CPU count.

    Raises:
        ConfigError: If QCS_THREADS is not a positive integer
    """
    raw = os.getenv("QCS_THREADS")
    if not raw:
        return max(1, os.cpu_count() or 1)
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigError(f"QCS_THREADS must be an integer, got {raw!r}") from e
    if threads < 1:
        raise ConfigError(f"QCS_THREADS must be >= 1, got {threads}")
    return threads


def setup_executor(max_workers=None):
    """
    Set up the thread pool used for independent (map, K) cases.

    Returns:
        ThreadPoolExecutor: Pool capped by QCS_THREADS
    """
    workers = max_workers or thread_count()
    logger.debug(f"Starting worker pool with {workers} threads")
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="qcs")


def ordered_map(fn, items, max_workers=None):
    """Apply fn to every item concurrently; results come back in input order."""
    items = list(items)
    if len(items) <= 1:
        return [fn(item) for item in items]
    with setup_executor(max_workers) as executor:
        return list(executor.map(fn, items))

from __future__ import annotations

import logging
import os

_LOGGER = logging.getLogger("frale")

#: name of the environment variable capping the Monte Carlo worker pool
THREADS_ENV = "FRALE_THREADS"


def worker_count(requested: int | None = None) -> int:
    """
    Number of workers to use for Monte Carlo ensembles.

    :param requested: explicit request, wins over the environment when given
    :return: ``requested``, else ``FRALE_THREADS``, else the machine parallelism; never less than one

    """
    if requested is not None:
        return max(1, int(requested))
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            _LOGGER.warning("Ignoring %s=%r, not an integer", THREADS_ENV, raw)
        else:
            if value >= 1:
                return value
            _LOGGER.warning("Ignoring %s=%r, must be at least 1", THREADS_ENV, raw)
    return os.cpu_count() or 1


__all__ = [
    "THREADS_ENV",
    "worker_count",
]

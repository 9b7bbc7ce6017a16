"""Selects the compiled advancer when available, else the numpy fallback.

Set ``OSC_CONN_BACKEND=python`` to force the fallback.  ``OSC_CONN_THREADS``
caps the worker threads used by the compiled kernel.
"""
import logging
import os

from . import _pykernels

logger = logging.getLogger(__name__)

_ckernels = None
if os.environ.get("OSC_CONN_BACKEND", "").lower() not in ("python", "py", "numpy"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        logger.debug("compiled kernel unavailable, using numpy fallback")
        _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"


def thread_count() -> int:
    """Worker threads for the compiled kernel; never exceeds the CPU count."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get("OSC_CONN_THREADS")
    if raw is None or raw.strip() == "":
        return cpus
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"OSC_CONN_THREADS must be an integer >= 1, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"OSC_CONN_THREADS must be an integer >= 1, got {raw!r}")
    return min(n, cpus)


def get_advance(backend: str | None = None):
    """Return the ``advance`` callable for ``backend`` ('cython', 'python' or None for default)."""
    if backend is None:
        backend = BACKEND
    if backend == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernel is not built")
        return _ckernels.advance
    if backend == "python":
        return _pykernels.advance
    raise ValueError(f"unknown backend {backend!r}")

"""Kernel backend selection.

The environment variable ``ZONAL_CLEARING_BACKEND`` picks the implementation
of the hot loops: ``numba`` (default when numba imports) or ``numpy``.
"""
import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

ENV_VAR = "ZONAL_CLEARING_BACKEND"
BACKENDS = ("numba", "numpy")


def requested_backend():
    name = os.environ.get(ENV_VAR, "").strip().lower()
    if not name:
        return "numba" if HAVE_NUMBA else "numpy"
    if name not in BACKENDS:
        raise ValueError(f"{ENV_VAR} must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise ImportError(f"{ENV_VAR}=numba but numba is not installed")
    return name


BACKEND = requested_backend()

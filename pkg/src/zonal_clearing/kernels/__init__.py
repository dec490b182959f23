"""Hot loops of the solver and graph search.

``simplex_loop``, ``pivot`` and ``dfs_reach`` resolve to the numba or numpy
implementation according to :data:`zonal_clearing._backend.BACKEND`.
Use :func:`get_kernels` to reach a specific backend explicitly.
"""
from types import SimpleNamespace

from .._backend import BACKEND, BACKENDS, HAVE_NUMBA
from . import numpy_impl

# backends usable in this environment
AVAILABLE = tuple(b for b in BACKENDS if b != "numba" or HAVE_NUMBA)


def get_kernels(name=None):
    name = name or BACKEND
    if name == "numpy":
        mod = numpy_impl
    elif name == "numba":
        if not HAVE_NUMBA:
            raise ImportError("numba backend requested but numba is not installed")
        from . import numba_impl as mod
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return SimpleNamespace(
        name=name, simplex_loop=mod.simplex_loop, pivot=mod.pivot, dfs_reach=mod.dfs_reach
    )


_active = get_kernels()
simplex_loop = _active.simplex_loop
pivot = _active.pivot
dfs_reach = _active.dfs_reach

__all__ = ["AVAILABLE", "BACKEND", "get_kernels", "simplex_loop", "pivot", "dfs_reach"]

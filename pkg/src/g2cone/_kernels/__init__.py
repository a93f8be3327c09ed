"""Kernel backend selection: compiled extension if built, else pure Python.

Set G2CONE_BACKEND=python to force the fallback even when the extension
is present.
"""
from __future__ import annotations

import os

if os.environ.get("G2CONE_BACKEND", "").lower() == "python":
    from . import py_backend as _impl
else:
    try:
        from . import c_backend as _impl
    except ImportError:
        from . import py_backend as _impl

from . import py_backend

BACKEND = _impl.BACKEND
QuadratureError = _impl.QuadratureError

quad_F = _impl.quad_F
quad_dFdf = _impl.quad_dFdf
solve_B = _impl.solve_B
solve_B_many = _impl.solve_B_many
rk4_characteristic = _impl.rk4_characteristic


def backend_name() -> str:
    return BACKEND


def available_backends():
    """Mapping of backend name -> module, for benchmarks and agreement tests."""
    out = {"python": py_backend}
    try:
        from . import c_backend

        out["cython"] = c_backend
    except ImportError:
        pass
    return out

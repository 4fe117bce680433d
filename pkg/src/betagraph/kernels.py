"""Backend selection for the sampling loops.

The compiled extension is used when it imports; set ``BETAGRAPH_PURE=1`` to
force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
coupled_degrees = _kernels_py.coupled_degrees
walk_triangle = _kernels_py.walk_triangle
walk_rectangle = _kernels_py.walk_rectangle

if os.environ.get("BETAGRAPH_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _ext
    except ImportError:  # extension not built
        _ext = None
    if _ext is not None:
        BACKEND = "cython"
        coupled_degrees = _ext.coupled_degrees
        walk_triangle = _ext.walk_triangle
        walk_rectangle = _ext.walk_rectangle

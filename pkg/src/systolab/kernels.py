"""Backend selection for the hot loops.

The compiled extension is preferred; set ``SYSTOLAB_PURE_PYTHON=1`` to force
the pure-Python fallback. ``BACKEND`` names the module actually in use.
"""
import os

from . import _pykernels

if os.environ.get("SYSTOLAB_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "python"

antipodal_lengths = _impl.antipodal_lengths
shortest_path = _impl.shortest_path
sh_series = _impl.sh_series


def backend_module(name):
    """Return the kernel module for ``name`` in {"compiled", "python"}."""
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")

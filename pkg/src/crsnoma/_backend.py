"""Kernel backend selection.

Set CRSNOMA_BACKEND=numpy to force the pure-numpy fallback; anything else
(or unset) uses the numba kernels when numba imports cleanly.  The selected
module is stored in `kernels`; `backend_name()` reports which one won.
"""

from __future__ import annotations

import os

from . import _kernels_numpy

_requested = os.environ.get("CRSNOMA_BACKEND", "numba").strip().lower()

if _requested == "numpy":
    kernels = _kernels_numpy
    _name = "numpy"
else:
    try:
        from . import _kernels_numba as _kn
        kernels = _kn
        _name = "numba"
    except ImportError:
        kernels = _kernels_numpy
        _name = "numpy"


def backend_name() -> str:
    return _name


def warmup() -> None:
    """Pre-compile the numba kernels (no-op on the numpy path)."""
    fn = getattr(kernels, "warmup", None)
    if fn is not None:
        fn()

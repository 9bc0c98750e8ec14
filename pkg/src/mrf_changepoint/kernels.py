"""Backend selection for the hot loops.

The compiled Cython module is used when it imports; otherwise the numpy
implementation in :mod:`._kernels_py` takes over.  Setting the environment
variable ``MRF_CP_BACKEND=python`` forces the fallback.
"""

import os

from . import _kernels_py

_FORCE_PYTHON = os.environ.get("MRF_CP_BACKEND", "").lower() == "python"

if _FORCE_PYTHON:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

segment_loss = _impl.segment_loss
segment_loss_grad = _impl.segment_loss_grad
row_phi = _impl.row_phi
gibbs_sweeps = _impl.gibbs_sweeps


def get_backend(name):
    """Return the kernel namespace for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")

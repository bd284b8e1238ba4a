"""Kernel backend selection.

Imports the compiled Cython kernels when the extension was built, otherwise
the NumPy fallback.  `QGROUND_PURE_PYTHON=1` forces the fallback.  The
compiled kernels cover the default float64 precision; float32 inputs take
the NumPy path either way.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("QGROUND_PURE_PYTHON") == "1":
    _ext = None
else:
    try:
        from . import _ckernels as _ext
    except ImportError:
        _ext = None

HAVE_EXT = _ext is not None
BACKEND = _ext.name if _ext is not None else _pykernels.name


def _pick(x):
    if _ext is not None and x.dtype == np.float64:
        return _ext
    return _pykernels


def linear_fwd(x, W, b):
    return _pick(x).linear_fwd(x, W, b)


def linear_bwd(x, W, gy):
    return _pick(x).linear_bwd(x, W, gy)


def mish_fwd(x):
    return _pick(x).mish_fwd(x)


def mish_bwd(x, t, gy):
    return _pick(x).mish_bwd(x, t, gy)


def scatter_add_rows(out, idx, src):
    _pick(out).scatter_add_rows(out, idx, src)


def seg_lse_fwd(sorted_vals, starts, seg_of_row, alpha):
    return _pick(sorted_vals).seg_lse_fwd(sorted_vals, starts, seg_of_row, alpha)


def seg_lse_bwd(gout, expm, segsum, seg_of_row):
    return _pick(expm).seg_lse_bwd(gout, expm, segsum, seg_of_row)

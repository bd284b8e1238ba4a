"""NumPy implementations of the hot numeric kernels.

`qground._ckernels` (Cython) mirrors these signatures; `qground.kernels`
picks whichever is available at import time.  Two properties matter beyond
speed:

* determinism: every reduction runs in a fixed order, so identical inputs
  give bit-identical outputs on a given backend;
* row-permutation equivariance of `linear_fwd`: each output row must be
  computed by the same accumulation order regardless of its position, which
  is why this uses a non-BLAS einsum (BLAS tail kernels may treat edge rows
  differently).  The network's canonical pre-sorting of reduction operands
  relies on this to make values exactly invariant under object renamings.
"""

import numpy as np

name = "numpy"


def linear_fwd(x, W, b):
    # x: (n, i), W: (o, i), b: (o,) -> (n, o)
    return np.einsum("ni,oi->no", x, W, optimize=False) + b


def linear_bwd(x, W, gy):
    gx = np.einsum("no,oi->ni", gy, W, optimize=False)
    gW = np.einsum("no,ni->oi", gy, x, optimize=False)
    gb = gy.sum(axis=0)
    return gx, gW, gb


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    # exp(-softplus(-x)): stable for both signs
    return np.exp(-np.logaddexp(0.0, -x))


def mish_fwd(x):
    # Returns (value, tanh(softplus(x))); the latter is reused by backward.
    t = np.tanh(_softplus(x))
    return x * t, t


def mish_bwd(x, t, gy):
    return gy * (t + x * (1.0 - t * t) * _sigmoid(x))


def scatter_add_rows(out, idx, src):
    # out[idx[r]] += src[r], applied in row order.
    np.add.at(out, idx, src)


def seg_lse_fwd(sorted_vals, starts, seg_of_row, alpha):
    """Scaled log-sum-exp over contiguous segments of pre-sorted rows.

    sorted_vals: (M, k) rows already ordered by (segment, row content);
    starts: (S,) first row of each non-empty segment; seg_of_row: (M,)
    segment index per row.  Returns (out (S, k), expm (M, k), segsum (S, k));
    expm and segsum are reused by the backward pass.
    """
    mx = np.maximum.reduceat(sorted_vals, starts, axis=0)
    expm = np.exp(alpha * (sorted_vals - mx[seg_of_row]))
    segsum = np.add.reduceat(expm, starts, axis=0)
    out = mx + np.log(segsum) / alpha
    return out, expm, segsum


def seg_lse_bwd(gout, expm, segsum, seg_of_row):
    # d lse / d row = softmax weight, computed from saved intermediates.
    return gout[seg_of_row] * (expm / segsum[seg_of_row])

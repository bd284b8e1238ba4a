"""Minimal dense-tensor engine with reverse-mode automatic differentiation.

Just enough for the relational value network: linear maps, the Mish
activation, row gathering/concatenation, segment-wise smooth maximum,
canonical row summation, squared-error loss, and Adam.  Numeric inner loops
live in `qground.kernels` (compiled when available, NumPy otherwise).

Recording is define-by-run: operations executed inside a `with Tape():`
block append backward closures in construction order, which is already a
topological order, so `tape.backward(loss)` is one reversed sweep that
visits every operation once and accumulates gradients additively.  Without
an active tape the same functions are plain forward computations.

Reductions whose float result depends on operand order (smooth maximum,
row summation) sort their operands canonically first, so outputs are
bit-identical under any permutation of the inputs.
"""

from __future__ import annotations

import numpy as np

from . import kernels as K

_TAPES = []


def _tape():
    return _TAPES[-1] if _TAPES else None


class Tape:
    def __init__(self):
        self.ops = []

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _TAPES.pop()

    def backward(self, loss):
        if loss.grad is None:
            loss.grad = np.ones_like(loss.data)
        for fn in reversed(self.ops):
            fn()


class Tensor:
    __slots__ = ("data", "grad")

    def __init__(self, data, dtype=None):
        self.data = np.asarray(data, dtype=dtype)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


def _acc(t: Tensor, g):
    if t.grad is None:
        t.grad = np.array(g)  # materializes views/broadcasts
    else:
        t.grad += g


def _c(a):
    return np.ascontiguousarray(a)


# ---------------------------------------------------------------------------
# Operations.


def linear(W: Tensor, b: Tensor, x: Tensor) -> Tensor:
    """W x + b for a single vector x, or row-wise for a matrix of rows."""
    single = x.data.ndim == 1
    xd = x.data.reshape(1, -1) if single else x.data
    if xd.shape[1] != W.data.shape[1]:
        raise ValueError(f"linear: x has width {xd.shape[1]}, W expects {W.data.shape[1]}")
    yd = K.linear_fwd(_c(xd), W.data, b.data)
    out = Tensor(yd.reshape(-1) if single else yd)
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            gy = out.grad.reshape(1, -1) if single else out.grad
            gx, gW, gb = K.linear_bwd(_c(xd), W.data, _c(gy))
            _acc(x, gx.reshape(x.data.shape))
            _acc(W, gW)
            _acc(b, gb)
        tape.ops.append(bwd)
    return out


def mish(x: Tensor) -> Tensor:
    single = x.data.ndim == 1
    xd = _c(x.data.reshape(1, -1) if single else x.data)
    yd, t = K.mish_fwd(xd)
    out = Tensor(yd.reshape(-1) if single else yd)
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            gy = out.grad.reshape(1, -1) if single else out.grad
            gx = K.mish_bwd(xd, t, _c(gy))
            _acc(x, gx.reshape(x.data.shape))
        tape.ops.append(bwd)
    return out


def mlp2(W1, b1, W2, b2, x: Tensor) -> Tensor:
    """Fused linear -> Mish -> linear (the network's MLP shape); one tape
    entry instead of three, which matters in the per-sample training loop."""
    single = x.data.ndim == 1
    xd = _c(x.data.reshape(1, -1) if single else x.data)
    h = K.linear_fwd(xd, W1.data, b1.data)
    a, t = K.mish_fwd(h)
    y = K.linear_fwd(a, W2.data, b2.data)
    out = Tensor(y.reshape(-1) if single else y)
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            gy = out.grad.reshape(1, -1) if single else out.grad
            ga, gW2, gb2 = K.linear_bwd(a, W2.data, _c(gy))
            gh = K.mish_bwd(h, t, ga)
            gx, gW1, gb1 = K.linear_bwd(xd, W1.data, gh)
            _acc(W2, gW2)
            _acc(b2, gb2)
            _acc(W1, gW1)
            _acc(b1, gb1)
            _acc(x, gx.reshape(x.data.shape))
        tape.ops.append(bwd)
    return out


def gather_concat(F: Tensor, idx: np.ndarray) -> Tensor:
    """Rows F[idx] concatenated along columns: (n, m) indices -> (n, m*k)."""
    n, m = idx.shape
    k = F.data.shape[1]
    flat = idx.reshape(-1)
    out = Tensor(F.data[flat].reshape(n, m * k))
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            if F.grad is None:
                F.grad = np.zeros_like(F.data)
            K.scatter_add_rows(F.grad, flat, _c(out.grad.reshape(n * m, k)))
        tape.ops.append(bwd)
    return out


def reshape(x: Tensor, shape) -> Tensor:
    out = Tensor(x.data.reshape(shape))
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            _acc(x, out.grad.reshape(x.data.shape))
        tape.ops.append(bwd)
    return out


def concat_rows(parts) -> Tensor:
    out = Tensor(np.concatenate([p.data for p in parts], axis=0))
    sizes = [p.data.shape[0] for p in parts]
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            off = 0
            for p, size in zip(parts, sizes):
                _acc(p, out.grad[off : off + size])
                off += size
        tape.ops.append(bwd)
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(np.concatenate([a.data, b.data], axis=1))
    ka = a.data.shape[1]
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            _acc(a, out.grad[:, :ka])
            _acc(b, out.grad[:, ka:])
        tape.ops.append(bwd)
    return out


def _canonical_order(vals, primary=None):
    # Sort rows by (primary, col0, col1, ...): np.lexsort keys run last-first.
    keys = tuple(vals[:, c] for c in range(vals.shape[1] - 1, -1, -1))
    if primary is not None:
        keys = keys + (primary,)
    return np.lexsort(keys)


def segment_structure(dst: np.ndarray):
    """Fixed per-input segment layout: (segment ids, starts, row->segment).

    The canonical sort below orders rows primarily by destination, so the
    block boundaries depend only on `dst` and can be computed once and
    reused across layers and epochs.
    """
    seg_ids, counts = np.unique(dst, return_counts=True)
    starts = np.zeros(len(seg_ids), dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    seg_of_row = np.repeat(np.arange(len(seg_ids), dtype=np.int64), counts)
    return seg_ids, starts, seg_of_row


def segment_smooth_max(msgs: Tensor, dst: np.ndarray, n_segments: int, alpha: float,
                       seg=None) -> Tensor:
    """Componentwise smooth maximum of message rows grouped by destination.

    Rows of each segment are sorted canonically before the scaled
    log-sum-exp, so the result is exactly permutation-invariant.  Segments
    with no incoming rows yield the zero vector.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    m, k = msgs.data.shape
    out_data = np.zeros((n_segments, k), dtype=msgs.data.dtype)
    if m == 0:
        return Tensor(out_data)
    seg_ids, starts, seg_of_row = segment_structure(dst) if seg is None else seg
    order = _canonical_order(msgs.data, primary=dst)
    sorted_vals = _c(msgs.data[order])
    ne, expm, segsum = K.seg_lse_fwd(sorted_vals, starts, seg_of_row, float(alpha))
    out_data[seg_ids] = ne
    out = Tensor(out_data)
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            g_ne = _c(out.grad[seg_ids])
            g_sorted = K.seg_lse_bwd(g_ne, expm, segsum, seg_of_row)
            g_msgs = np.empty_like(msgs.data)
            g_msgs[order] = g_sorted
            _acc(msgs, g_msgs)
        tape.ops.append(bwd)
    return out


def smooth_max(rows, alpha: float, dim: int | None = None) -> Tensor:
    """Smooth maximum of a multiset of equal-length vectors.

    Accepts a list of 1-d tensors or one 2-d tensor of rows; the empty
    multiset yields the zero vector (dim required in that case).
    """
    if isinstance(rows, Tensor):
        stacked = rows
    else:
        if not rows:
            if dim is None:
                raise ValueError("smooth_max of an empty multiset needs dim")
            return Tensor(np.zeros(dim))
        stacked = concat_rows([reshape(r, (1, -1)) for r in rows])
    seg = segment_smooth_max(
        stacked, np.zeros(stacked.data.shape[0], dtype=np.int64), 1, alpha
    )
    return reshape(seg, (-1,))


def sum_rows(F: Tensor) -> Tensor:
    """Columnwise sum over rows, summed in canonical row order so the result
    is bit-identical under row permutations."""
    order = _canonical_order(F.data)
    out = Tensor(F.data[order].sum(axis=0))
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            _acc(F, np.broadcast_to(out.grad, F.data.shape))
        tape.ops.append(bwd)
    return out


def mse(pred: Tensor, target: float) -> Tensor:
    diff = pred.data.reshape(-1)[0] - target
    out = Tensor(np.array([diff * diff], dtype=pred.data.dtype))
    tape = _tape()
    if tape is not None:
        def bwd():
            if out.grad is None:
                return
            _acc(pred, (out.grad.reshape(-1)[0] * 2.0 * diff) * np.ones_like(pred.data))
        tape.ops.append(bwd)
    return out


# ---------------------------------------------------------------------------
# Adam.


def adam_step(params, grads, state=None, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
    """One bias-corrected Adam update, in place on a list of arrays.

    ``state`` is (t, first moments, second moments); pass None to start.
    Returns the new state.
    """
    b1, b2 = betas
    if state is None:
        state = (0, [np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])
    t, ms, vs = state
    t += 1
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    for p, g, m_arr, v_arr in zip(params, grads, ms, vs):
        m_arr *= b1
        m_arr += (1.0 - b1) * g
        v_arr *= b2
        v_arr += (1.0 - b2) * (g * g)
        p -= lr * (m_arr / bc1) / (np.sqrt(v_arr / bc2) + eps)
    return (t, ms, vs)


class Adam:
    """Adam over a dict of named parameter tensors (uses .grad slots)."""

    def __init__(self, params: dict, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.names = list(params)
        self.params = params
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.state = None

    def step(self):
        tensors = [self.params[n] for n in self.names]
        grads = [
            t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors
        ]
        self.state = adam_step(
            [t.data for t in tensors], grads, self.state, self.lr, self.betas, self.eps
        )

    def zero_grad(self):
        for n in self.names:
            self.params[n].grad = None

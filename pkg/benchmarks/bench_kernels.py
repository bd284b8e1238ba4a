#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Micro-benchmarks call both kernel modules directly; the end-to-end rows time
a full value-network forward/backward in a subprocess per backend (selection
happens at import, controlled by QGROUND_PURE_PYTHON).

Run:  python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from qground import _pykernels

try:
    from qground import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, repeat=200):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def micro_rows():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, 32))
    W = rng.normal(size=(32, 32))
    b = rng.normal(size=32)
    gy = rng.normal(size=(200, 32))
    msgs = rng.normal(size=(400, 16))
    dst = np.sort(rng.integers(0, 30, size=400)).astype(np.int64)
    ids, counts = np.unique(dst, return_counts=True)
    starts = np.zeros(len(ids), dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    seg_of_row = np.repeat(np.arange(len(ids), dtype=np.int64), counts)
    out = np.zeros((30, 16))
    idx = rng.integers(0, 30, size=400).astype(np.int64)

    cases = [
        ("linear_fwd (200x32 @ 32x32)", lambda m: m.linear_fwd(x, W, b)),
        ("linear_bwd", lambda m: m.linear_bwd(x, W, gy)),
        ("mish_fwd (200x32)", lambda m: m.mish_fwd(x)),
        ("seg_lse_fwd (400 rows, 30 segs)",
         lambda m: m.seg_lse_fwd(msgs, starts, seg_of_row, 12.0)),
        ("scatter_add_rows (400 rows)",
         lambda m: m.scatter_add_rows(out, idx, msgs)),
    ]
    rows = []
    for label, call in cases:
        t_py = _time(lambda: call(_pykernels))
        t_cy = _time(lambda: call(_ckernels)) if _ckernels else None
        rows.append((label, t_py, t_cy))
    return rows


_E2E_SNIPPET = r"""
import time
from qground import generators, kernels, rgnn, tensor

cfg = generators.GeneratorConfig(domain="visitall", objects=(16, 16), colors=(2, 2),
                                 variables=(2, 2))
problem = generators.generate_instance(cfg, 7)
sig = rgnn.encoding_signature(problem.domain)
params = rgnn.init_params(sig, k=16, L=10, n_dead=20.0, seed=1)
comp = rgnn.compile_input(
    rgnn.encode(problem.domain, problem.n_objects, problem.init, problem.goal), sig)

def step():
    for t in params.tensors.values():
        t.grad = None
    with tensor.Tape() as tape:
        loss = tensor.mse(rgnn.forward(params, comp), 3.0)
        tape.backward(loss)

step()
t0 = time.perf_counter()
for _ in range(40):
    step()
print(kernels.BACKEND, (time.perf_counter() - t0) / 40)
"""


def e2e_rows():
    rows = {}
    for pure in ("0", "1"):
        env = dict(os.environ, QGROUND_PURE_PYTHON=pure)
        out = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET], env=env, capture_output=True, text=True
        )
        if out.returncode != 0:
            raise RuntimeError(out.stderr)
        backend, seconds = out.stdout.split()
        rows[backend] = float(seconds)
    return rows


def main():
    print(f"{'kernel':<34} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for label, t_py, t_cy in micro_rows():
        cy = f"{t_cy * 1e6:9.1f}u" if t_cy else "       n/a"
        ratio = f"{t_py / t_cy:7.2f}x" if t_cy else "     n/a"
        print(f"{label:<34} {t_py * 1e6:9.1f}u {cy} {ratio}")
    print()
    rows = e2e_rows()
    if "cython" in rows:
        print(
            f"end-to-end fwd+bwd (visitall, k=16, L=10): "
            f"numpy {rows['numpy'] * 1e3:.2f} ms, cython {rows['cython'] * 1e3:.2f} ms, "
            f"speedup {rows['numpy'] / rows['cython']:.2f}x"
        )
    else:
        print(f"end-to-end fwd+bwd: numpy {rows['numpy'] * 1e3:.2f} ms (extension not built)")


if __name__ == "__main__":
    main()

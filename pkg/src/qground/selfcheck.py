"""Built-in sanity battery for the `selfcheck` subcommand.

Fast spot checks of the numeric core: finite-difference gradients, smooth
maximum bounds and permutation invariance, encoding counts, renaming
invariance of the network value, and determinism digests.  The full test
suite is the real gate; this is the five-second field version.
"""

from __future__ import annotations

import numpy as np

from . import generators, kernels, rgnn, tensor
from .tensor import Tape, Tensor


def _fd_ok(fn, x0, analytic, h=1e-5, tol=1e-4):
    worst = 0.0
    flat = x0.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = fn()
        flat[i] = old - h
        down = fn()
        flat[i] = old
        num = (up - down) / (2 * h)
        denom = max(abs(num), abs(analytic.reshape(-1)[i]), 1.0)
        worst = max(worst, abs(num - analytic.reshape(-1)[i]) / denom)
    return worst <= tol, worst


def run() -> int:
    checks = []
    rng = np.random.default_rng(7)

    # Gradient of a small MLP chain against central finite differences.
    W = Tensor(rng.normal(size=(3, 4)))
    b = Tensor(rng.normal(size=3))
    x = Tensor(rng.normal(size=4))
    with Tape() as tape:
        y = tensor.mish(tensor.linear(W, b, x))
        s = tensor.smooth_max([y], alpha=12.0)
        loss = tensor.mse(
            tensor.linear(Tensor(np.ones((1, 3))), Tensor(np.zeros(1)), s), 1.5
        )
        tape.backward(loss)

    def loss_value():
        y = tensor.mish(tensor.linear(W, b, x))
        s = tensor.smooth_max([y], alpha=12.0)
        v = float(np.ones(3) @ s.data)
        return (v - 1.5) ** 2

    ok, worst = _fd_ok(loss_value, W.data, W.grad)
    checks.append(("gradient: linear+mish+smooth-max wrt W", ok, f"rel err {worst:.2e}"))
    ok, worst = _fd_ok(loss_value, x.data, x.grad)
    checks.append(("gradient: linear+mish+smooth-max wrt x", ok, f"rel err {worst:.2e}"))

    # Smooth max bounds and permutation invariance.
    rows = Tensor(rng.normal(size=(6, 5)))
    sm = tensor.smooth_max(rows, alpha=12.0).data
    mx = rows.data.max(axis=0)
    ok = bool(np.all(sm >= mx - 1e-12) and np.all(sm <= mx + np.log(6) / 12.0 + 1e-12))
    checks.append(("smooth-max between max and max+ln(n)/alpha", ok, ""))
    perm = rng.permutation(6)
    sm2 = tensor.smooth_max(Tensor(rows.data[perm].copy()), alpha=12.0).data
    ok = bool(np.array_equal(sm, sm2))
    checks.append(("smooth-max bit-identical under row permutation", ok, ""))

    # Encoding counts and renaming invariance on a generated instance.
    config = generators.GeneratorConfig(domain="blocks", objects=(4, 4), colors=(2, 2))
    problem = generators.generate_instance(config, seed=11)
    enc = rgnn.encode(problem.domain, problem.n_objects, problem.init, problem.goal)
    n, m = problem.n_objects, len(problem.goal.variables)
    ok = (
        enc.count("constant") == n
        and enc.count("variable") == m
        and enc.count("possible-binding") == n * m
    )
    checks.append(("encoding counts |O|, |X|, |O|*|X|", ok, f"n={n} m={m}"))

    sig = rgnn.encoding_signature(problem.domain)
    params = rgnn.init_params(sig, k=8, L=3, n_dead=10.0, seed=3)
    v0 = rgnn.forward(params, enc).item()
    perm = [int(i) for i in np.random.default_rng(5).permutation(n)]
    remap = lambda t: perm[t]
    state2 = frozenset((a[0],) + tuple(remap(t) for t in a[1:]) for a in problem.init)
    goal2 = problem.goal.__class__(
        problem.goal.variables,
        tuple((a[0],) + tuple(t if t < 0 else remap(t) for t in a[1:])
              for a in problem.goal.atoms),
        tuple(sorted((min(x, y), max(x, y)) for x, y in (
            (a if a < 0 else remap(a), b if b < 0 else remap(b))
            for a, b in problem.goal.neq))),
    )
    v1 = rgnn.forward(params, rgnn.encode(problem.domain, n, state2, goal2)).item()
    ok = v0 == v1
    checks.append(("value invariant under object renaming", ok, f"{v0!r} vs {v1!r}"))

    v2 = rgnn.forward(params, enc).item()
    checks.append(("forward deterministic", v0 == v2, ""))

    print(f"kernel backend: {kernels.BACKEND}")
    failures = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        print(f"[{status}] {name}{suffix}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 2

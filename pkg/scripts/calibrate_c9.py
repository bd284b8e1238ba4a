#!/usr/bin/env python3
"""Probe speedup-direction configurations with a quickly trained model."""

import sys
import time

import numpy as np

from qground import dataset, evalharness, generators, goals, policy, rgnn
from qground.seeding import derive_seed

SEED = 20240806
EPOCHS = int(sys.argv[1]) if len(sys.argv) > 1 else 10

t0 = time.time()
gen = generators.GeneratorConfig(domain="visitall", objects=(9, 16), colors=(2, 2),
                                 variables=(1, 2), neq="none")
ds = dataset.generate_dataset(gen, dataset.SamplerConfig(n_samples=2000, n_instances=50),
                              seed=SEED, threads=4)
sig = rgnn.encoding_signature(ds.domain)
params = rgnn.init_params(sig, k=16, L=10, alpha=12.0, n_dead=ds.meta["n_dead"], seed=SEED)
best, _ = rgnn.train(params, ds, rgnn.TrainConfig(epochs=EPOCHS, seed=SEED))
print(f"[{time.time()-t0:.0f}s] trained {EPOCHS} epochs (proxy model)")

for objects, variables, colors, label in [
    ((16, 20), (5, 6), (3, 4), "visitall 16-20 cells, 5-6 vars, 3-4 colors"),
    ((20, 25), (5, 6), (3, 4), "visitall 20-25 cells, 5-6 vars, 3-4 colors"),
]:
    config = generators.GeneratorConfig(domain="visitall", objects=objects,
                                        colors=colors, variables=variables, neq="none")
    ratios, censored, unsolved, bind_counts = [], 0, 0, []
    for i in range(12):
        problem = generators.generate_instance(config, derive_seed(SEED, "c9", i))
        bind_counts.append(goals.compile_dnf(problem).n_bindings)
        res = evalharness.speedup(
            problem, policy.model_value_fn(best, problem),
            mode="gbfs-goalcount", timeout_s=120, runs=1,
        )
        if res.ratio is None:
            censored += 1
        else:
            ratios.append(res.ratio)
            if res.grounded_status != "solved":
                unsolved += 1
        print(f"  inst {i}: binds={bind_counts[-1]} ratio={res.ratio} "
              f"tg={res.t_grounded:.2f} tc={res.t_compiled:.2f} "
              f"g={res.grounded_status} c={res.compiled_status}")
    ratios.sort()
    med = ratios[len(ratios)//2] if ratios else None
    print(f"[{time.time()-t0:.0f}s] {label}: median {med} n={len(ratios)} "
          f"censored={censored} grounded_unsolved={unsolved}")

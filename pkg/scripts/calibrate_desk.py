#!/usr/bin/env python3
"""Calibration run for the desk-scale learning setup (not part of the suite).

Trains the value network on the desk Blocks/Visitall protocol and reports
held-out coverage and cost ratios for several epoch budgets, to pick the
configuration the acceptance suite freezes.
"""

import sys
import time

import numpy as np

from qground import dataset, evalharness, generators, oracle, policy, rgnn
from qground.seeding import derive_seed

DOMAIN = sys.argv[1] if len(sys.argv) > 1 else "blocks"
EPOCHS = int(sys.argv[2]) if len(sys.argv) > 2 else 30
SEED = 20240806

if DOMAIN == "blocks":
    gen = generators.GeneratorConfig(domain="blocks", objects=(3, 5), colors=(2, 2),
                                     variables=(1, 2), neq="none")
else:
    gen = generators.GeneratorConfig(domain="visitall", objects=(9, 16), colors=(2, 2),
                                     variables=(1, 2), neq="none")

t0 = time.time()
sampler = dataset.SamplerConfig(n_samples=2000, n_instances=50, val_fraction=0.1)
ds = dataset.generate_dataset(gen, sampler, seed=SEED, threads=4)
dead = sum(s.dead_end for s in ds.samples)
costs = [s.cost for s in ds.samples if not s.dead_end]
print(f"[{time.time()-t0:7.1f}s] dataset: {len(ds.samples)} samples, {dead} dead, "
      f"n_dead={ds.meta['n_dead']}, mean finite cost {np.mean(costs):.2f}")

sig = rgnn.encoding_signature(ds.domain)
params = rgnn.init_params(sig, k=16, L=10, alpha=12.0, n_dead=ds.meta["n_dead"], seed=SEED)
config = rgnn.TrainConfig(lr=1e-3, batch_size=64, epochs=EPOCHS, seed=SEED)
best, logbook = rgnn.train(params, ds, config)
print(f"[{time.time()-t0:7.1f}s] trained {EPOCHS} epochs")
for entry in logbook[:: max(1, len(logbook) // 12)]:
    print("   ", entry)
print("    best val:", min(e["val_mse"] for e in logbook))

# held-out evaluation
test_problems = []
i = 0
while len(test_problems) < 100:
    problem = generators.generate_instance(gen, derive_seed(SEED, "test", i))
    i += 1
    ref = oracle.bfs_cost_from_state(problem, problem.init, problem.goal, cap=400_000)
    if ref.value is None:
        continue
    test_problems.append((problem, ref.value))

covered = 0
ratios = []
t1 = time.time()
for problem, ref in test_problems:
    fn = policy.model_value_fn(best, problem)
    res = policy.ground_and_solve(problem, fn, mode="optimal-bfs", timeout_s=60)
    if res.solved:
        covered += 1
        ratios.append(res.plan_result.cost / ref if ref else 1.0 if res.plan_result.cost == 0 else None)
ratios = [r for r in ratios if r is not None]
print(f"[{time.time()-t0:7.1f}s] eval: coverage {covered}/100, "
      f"mean ratio {np.mean(ratios):.3f} over {len(ratios)} (eval took {time.time()-t1:.0f}s)")

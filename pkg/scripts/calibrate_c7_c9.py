#!/usr/bin/env python3
"""Pre-validate acceptance criteria 7 and 9 using the desk Blocks bundle."""

import sys
import time

sys.path.insert(0, "tests")

import numpy as np

from conftest import _desk_bundle
from qground import evalharness, generators, policy
from qground.seeding import derive_seed

ACCEPT_SEED = 20240806

t0 = time.time()
gen = generators.GeneratorConfig(domain="blocks", objects=(3, 5), colors=(2, 2),
                                 variables=(1, 2), neq="none")
bundle = _desk_bundle(gen, "desk-blocks")
row = bundle["report"].rows[0]
print(f"[{time.time()-t0:6.0f}s] C6 blocks: coverage {row['coverage']:.1%} "
      f"ratio {row['mean_ratio']:.3f}")
first10 = [e["train_mse"] for e in bundle["log"][:10]]
print("monotone first 10:", all(a >= b for a, b in zip(first10, first10[1:])), first10)

baselines = evalharness.random_baselines(
    bundle["testset"], bundle["settings"], seed=derive_seed(ACCEPT_SEED, "baselines")
)
all_cov = baselines["random-all"].rows[0]["coverage"]
valid_cov = baselines["random-valid"].rows[0]["coverage"]
print(f"[{time.time()-t0:6.0f}s] C7: all {all_cov:.1%} valid {valid_cov:.1%} "
      f"learned {row['coverage']:.1%}")

config = generators.GeneratorConfig(domain="blocks", objects=(6, 7), colors=(2, 2),
                                    variables=(4, 5), neq="none")
ratios, censored, grounded_fail = [], 0, 0
for i in range(50):
    problem = generators.generate_instance(config, derive_seed(ACCEPT_SEED, "speedup", i))
    res = evalharness.speedup(
        problem, policy.model_value_fn(bundle["params"], problem),
        mode="gbfs-goalcount", timeout_s=60, runs=3,
    )
    if res.ratio is None:
        censored += 1
    else:
        ratios.append(res.ratio)
        if res.grounded_status != "solved":
            grounded_fail += 1
ratios.sort()
print(f"[{time.time()-t0:6.0f}s] C9: median {ratios[len(ratios)//2]:.2f} "
      f"min {ratios[0]:.2f} max {ratios[-1]:.2f} n={len(ratios)} censored={censored} "
      f"grounded_unsolved={grounded_fail}")

import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qground import dataset, evalharness, generators, oracle, policy, rgnn, strips
from qground.seeding import derive_seed

ACCEPT_SEED = 20240806
DESK_EPOCHS = 40


def _desk_bundle(gen_config, coverage_label):
    """Dataset -> training -> held-out evaluation, shared across the
    acceptance tests (trains once per session)."""
    t0 = time.time()
    sampler = dataset.SamplerConfig(n_samples=2000, n_instances=50, val_fraction=0.1)
    ds = dataset.generate_dataset(gen_config, sampler, seed=ACCEPT_SEED, threads=4)
    sig = rgnn.encoding_signature(ds.domain)
    params = rgnn.init_params(
        sig, k=16, L=10, alpha=12.0, n_dead=ds.meta["n_dead"], seed=ACCEPT_SEED
    )
    train_config = rgnn.TrainConfig(
        lr=1e-3, batch_size=64, epochs=DESK_EPOCHS, seed=ACCEPT_SEED
    )
    best, logbook = rgnn.train(params, ds, train_config)
    train_seconds = time.time() - t0

    testset = []
    i = 0
    while len(testset) < 100:
        problem = generators.generate_instance(
            gen_config, derive_seed(ACCEPT_SEED, coverage_label, "test", i)
        )
        i += 1
        ref = oracle.bfs_cost_from_state(problem, problem.init, problem.goal, cap=500_000)
        if ref.value is None:
            continue  # test coverage/quality on solvable instances
        testset.append(problem)
    settings = evalharness.EvalSettings(planner_mode="optimal-bfs", timeout_s=60.0)
    report = evalharness.evaluate(
        testset,
        lambda problem, i: policy.model_value_fn(best, problem),
        settings,
        label=coverage_label,
    )
    return {
        "dataset": ds,
        "params": best,
        "log": logbook,
        "testset": testset,
        "settings": settings,
        "report": report,
        "train_seconds": train_seconds,
    }


@pytest.fixture(scope="session")
def blocks_bundle():
    gen = generators.GeneratorConfig(
        domain="blocks", objects=(3, 5), colors=(2, 2), variables=(1, 2), neq="none"
    )
    return _desk_bundle(gen, "desk-blocks")


@pytest.fixture(scope="session")
def visitall_bundle():
    gen = generators.GeneratorConfig(
        domain="visitall", objects=(9, 16), colors=(2, 2), variables=(1, 2), neq="none"
    )
    return _desk_bundle(gen, "desk-visitall")


@pytest.fixture(scope="session")
def visitall_domain():
    return generators.builtin_domain("visitall")


@pytest.fixture(scope="session")
def blocks_domain():
    return generators.builtin_domain("blocks")


@pytest.fixture()
def visitall_1x3(visitall_domain):
    from helpers import VISITALL_1X3

    return strips.parse_problem(VISITALL_1X3, visitall_domain)


@pytest.fixture()
def visitall_2x2(visitall_domain):
    from helpers import VISITALL_2X2

    return strips.parse_problem(VISITALL_2X2, visitall_domain)

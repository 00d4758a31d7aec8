import numpy as np
import pytest

import posebridge as pb
from posebridge import synth


@pytest.fixture(scope="session")
def desk():
    return pb.load_schema("desk10")


@pytest.fixture(scope="session")
def small_store(desk):
    """120-landmark store: cheap enough for module tests."""
    ls = synth.sample_landmark_set(desk, 120, seed=21)
    return pb.build_store(ls, k=8, regularization=1e-8, seed=3)


@pytest.fixture(scope="session")
def big_engine(desk):
    """1000-landmark engine shared by the quality suites and acceptance."""
    ls = synth.sample_landmark_set(desk, 1000, seed=11)
    store = pb.build_store(ls, k=10, regularization=1e-8, seed=5)
    return pb.ProjectionEngine(store, n_candidates=10, n_backward=10, mode="relaxed")


def manifold_rng_configs(schema, count, seed):
    rng = np.random.default_rng(seed)
    lo = schema.joint_min + 0.05
    hi = schema.joint_max - 0.05
    return rng.uniform(lo, hi, (count, schema.humanoid_dim))

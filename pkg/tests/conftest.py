import logging

import numpy as np
import pytest

from batchsearch import (
    ClusterEnvConfig,
    SurrogateConfig,
    generate_cluster_env,
    validate_environment,
)

# duplicate-collapse warnings are expected all over synthetic fixtures
logging.getLogger("batchsearch.core").setLevel(logging.ERROR)


#: small-but-trainable settings shared by the fast tests
TINY_SURROGATE = SurrogateConfig(
    conv_layers=((8, 5),), dense_hidden=16, epochs=3, learning_rate=0.05
)


@pytest.fixture
def tiny_env():
    """Deterministic 4-sequence environment with hand-picked labels."""
    return validate_environment(
        ["ACGT", "AAAA", "CCCC", "GGGG", "TTTT", "ACAC"],
        [0.5, 0.9, 0.1, 0.7, 0.3, 0.6],
        batch_size=2,
    )


@pytest.fixture
def small_cluster_env():
    cfg = ClusterEnvConfig(
        n_clusters=3, per_cluster=60, length=12, seed=5, batch_size=6
    )
    env, truth = generate_cluster_env(cfg)
    return env, truth


def make_cluster_env(seed: int, **overrides):
    defaults = dict(n_clusters=3, per_cluster=60, length=12, seed=seed, batch_size=6)
    defaults.update(overrides)
    env, truth = generate_cluster_env(ClusterEnvConfig(**defaults))
    return env, truth

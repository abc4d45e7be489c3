"""Shared fixtures: synthetic radio maps at two sizes.

``syn_small`` is for unit/integration tests that only need plausible data;
``syn_full`` is the bundled benchmark instance (registry entry SYN1) whose
frozen reference numbers the acceptance tests check.
"""

import numpy as np
import pytest

from elmloc.synthetic import generate_synthetic, write_synthetic_dataset


@pytest.fixture(scope="session")
def syn_small():
    # small enough that an ELM fit is instant, large enough that every
    # (building, floor) group has a few dozen samples
    return generate_synthetic(seed=3, n_train=720, n_test=240, n_aps=40)


@pytest.fixture(scope="session")
def syn_full():
    return generate_synthetic()


@pytest.fixture(scope="session")
def syn1_dir(tmp_path_factory):
    """SYN1 materialized as CSV + manifest (the on-disk layout the CLI reads)."""
    root = tmp_path_factory.mktemp("data")
    write_synthetic_dataset(root)
    return root


@pytest.fixture()
def rng():
    return np.random.default_rng(0)

import numpy as np
import pytest

from dilationlab import random_semigroup


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def semigroup_suite(count=6, dim=2, norm=1.0, base_seed=100):
    return [random_semigroup(dim, base_seed + k, norm) for k in range(count)]


def unit_vector(dim, seed):
    r = np.random.default_rng(seed)
    v = r.standard_normal(dim) + 1j * r.standard_normal(dim)
    return v / np.linalg.norm(v)

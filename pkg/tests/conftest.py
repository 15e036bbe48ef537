import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qsd_bounds import StateSet

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rand_herm(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def rand_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    a = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return a @ a.conj().T


@pytest.fixture
def orthogonal_pair():
    return StateSet.from_pure([[1, 0], [0, 1]], [0.5, 0.5])


@pytest.fixture
def identical_pair():
    return StateSet([0.3, 0.7], [np.eye(2) / 2, np.eye(2) / 2])


@pytest.fixture
def overlap_pair():
    # |<psi0|psi1>| = 0.6
    return StateSet.from_pure([[1, 0], [0.6, 0.8]], [0.5, 0.5])


@pytest.fixture
def orthogonal_triple():
    return StateSet.from_pure(np.eye(3), [1 / 3, 1 / 3, 1 / 3])

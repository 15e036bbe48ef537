import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsd_bounds.states import (
    Povm,
    StateSet,
    StateSetError,
    gram,
    numerical_rank,
    probabilities,
    random_state_set,
    validate,
)

seeds = st.integers(0, 2**32 - 1)


def _failed(diag):
    return {c.name for c in diag.failures()}


def test_validate_orthogonal_pair(orthogonal_pair):
    assert validate(orthogonal_pair).ok


def test_validate_prior_sum():
    s = StateSet([0.6, 0.6], [np.eye(2) / 2, np.eye(2) / 2])
    diag = validate(s)
    assert "prior_sum" in _failed(diag)
    (check,) = [c for c in diag.checks if c.name == "prior_sum"]
    assert check.magnitude == pytest.approx(1.2)


def test_validate_negativity():
    s = StateSet([0.5, 0.5], [np.diag([1.1, -0.1]), np.eye(2) / 2])
    diag = validate(s)
    assert _failed(diag) >= {"states[0].positivity"}
    (check,) = [c for c in diag.checks if c.name == "states[0].positivity"]
    assert check.magnitude == pytest.approx(-0.1)


def test_validate_trace_and_hermiticity():
    s = StateSet([0.5, 0.5], [np.diag([1.0, 1.0]), np.array([[0.5, 0.1], [0.0, 0.5]])])
    assert {"states[0].trace", "states[1].hermitian"} <= _failed(validate(s))


def test_structural_errors():
    with pytest.raises(StateSetError):
        StateSet([], np.zeros((0, 2, 2)))
    with pytest.raises(StateSetError):
        StateSet([1.0], np.zeros((1, 2, 3)))
    with pytest.raises(StateSetError):
        StateSet([0.5, 0.5], np.zeros((3, 2, 2)))
    with pytest.raises(StateSetError):
        StateSet([1.0], [[[np.nan, 0], [0, 1]]])


def test_state_set_is_immutable(orthogonal_pair):
    with pytest.raises(ValueError):
        orthogonal_pair.rhos[0, 0, 0] = 2


def test_gram_examples():
    s = StateSet.from_pure([[1, 0], [1, 1]], [0.5, 0.5])
    np.testing.assert_allclose(gram(s), [[0.75, 0.25], [0.25, 0.25]], atol=1e-15)
    s = StateSet([0.3, 0.7], [np.eye(2) / 2, np.eye(2) / 2])
    np.testing.assert_allclose(gram(s), np.eye(2) / 2, atol=1e-15)
    single = StateSet([1.0], [np.diag([0.25, 0.75])])
    np.testing.assert_allclose(gram(single), single.rhos[0])


def test_probabilities_examples(orthogonal_pair, identical_pair):
    proj = Povm([np.diag([1, 0]), np.diag([0, 1])])
    assert probabilities(orthogonal_pair, proj) == pytest.approx((1, 0, 0))
    inc = Povm([np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2)], inconclusive=True)
    assert probabilities(orthogonal_pair, inc) == pytest.approx((0, 0, 1))
    likely = Povm([np.zeros((2, 2)), np.eye(2)])
    assert probabilities(identical_pair, likely) == pytest.approx((0.7, 0.3, 0))


def test_probabilities_shape_errors(orthogonal_pair):
    with pytest.raises(StateSetError):
        probabilities(orthogonal_pair, Povm([np.eye(3)]))
    with pytest.raises(StateSetError):
        probabilities(orthogonal_pair, Povm([np.eye(2)]))


@given(seeds, st.integers(1, 5), st.integers(1, 5), st.integers(1, 4))
def test_probabilities_sum_to_one(seed, n, m, k):
    rng = np.random.default_rng(seed)
    s = random_state_set(n, m, rng.integers(1, n + 1), rng)
    # random POVM: whiten k random PSD operators
    ops = [a @ a.conj().T for a in rng.standard_normal((k + 1, n, n)) + 1j * rng.standard_normal((k + 1, n, n))]
    w, v = np.linalg.eigh(sum(ops))
    root = (v / np.sqrt(w)) @ v.conj().T
    elements = [root @ o @ root for o in ops]
    inconclusive = len(elements) == m + 1
    if len(elements) not in (m, m + 1):
        return
    pr = probabilities(s, Povm(elements, inconclusive=inconclusive))
    assert sum(pr) == pytest.approx(1, abs=1e-9)


def test_povm_violation():
    assert Povm([np.eye(2) / 2, np.eye(2) / 2]).is_valid()
    bad = Povm([np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])])
    assert bad.violation() == pytest.approx(0.5)
    assert not Povm([np.eye(2)] * 2).is_valid()


def test_random_pure_qubits():
    s = random_state_set(2, 2, 1, 7)
    for sigma in s.densities:
        np.testing.assert_allclose(np.linalg.eigvalsh(sigma)[::-1], [1, 0], atol=1e-10)


def test_random_rank_and_priors():
    s = random_state_set(4, 3, 2, 11)
    assert [numerical_rank(x) for x in s.densities] == [2, 2, 2]
    assert s.priors.sum() == pytest.approx(1, abs=1e-12)
    assert np.all(s.priors > 0)
    assert validate(s).ok


def test_random_deterministic():
    a = random_state_set(3, 3, 2, 123)
    b = random_state_set(3, 3, 2, 123)
    assert a.densities.tobytes() == b.densities.tobytes()
    assert a.priors.tobytes() == b.priors.tobytes()


@pytest.mark.parametrize("n,r", [(2, 0), (2, 3)])
def test_random_bad_rank(n, r):
    with pytest.raises(ValueError):
        random_state_set(n, 2, r, 0)


def test_random_rank_histogram():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        r = int(rng.integers(1, n + 1))
        s = random_state_set(n, 1, r, rng)
        assert numerical_rank(s.densities[0]) == r


@given(seeds, st.integers(1, 6), st.integers(1, 6))
def test_generated_total_trace(seed, n, m):
    s = random_state_set(n, m, 1 + seed % n, seed)
    assert np.trace(s.rhos.sum(axis=0)).real == pytest.approx(1, abs=1e-9)


def test_swapped(identical_pair):
    s = identical_pair.swapped(1)
    np.testing.assert_array_equal(s.priors, [0.7, 0.3])
    np.testing.assert_array_equal(identical_pair.swapped(0).priors, identical_pair.priors)

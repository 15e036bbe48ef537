import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsd_bounds import (
    IncParams,
    OracleNotConverged,
    StateSet,
    gram,
    inc_oracle,
    minerr_oracle,
    pcuip,
    probabilities,
    random_state_set,
)
from qsd_bounds.linalg import positive_part

seeds = st.integers(0, 2**32 - 1)


def random_case(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    n = int(rng.integers(2, 5))
    return random_state_set(n, m, int(rng.integers(1, n + 1)), rng)


def check_certificate(states, cert, a=0.0, p=0.0):
    """Recompute both sides of a certificate from scratch."""
    assert cert.povm.violation() <= 1e-9
    assert probabilities(states, cert.povm).pc == pytest.approx(cert.primal_value, abs=1e-10)
    z = cert.dual_operator
    for rho in states.rhos:
        assert np.linalg.eigvalsh(z - rho)[0] >= -1e-8
    assert np.linalg.eigvalsh(z - a * gram(states))[0] >= -1e-8
    assert np.trace(z).real - a * p == pytest.approx(cert.dual_value, abs=1e-10)
    assert cert.primal_value <= cert.dual_value + 1e-12


def test_minerr_examples(orthogonal_pair, identical_pair, overlap_pair):
    for states, value in [(orthogonal_pair, 1.0), (identical_pair, 0.7)]:
        cert = minerr_oracle(states, tol=1e-9)
        assert cert.primal_value == pytest.approx(value, abs=1e-9)
        assert cert.dual_value == pytest.approx(value, abs=1e-9)
        assert cert.dual_scalar == 0
    rho0, rho1 = overlap_pair.rhos
    exact = np.trace(rho0).real + np.trace(positive_part(rho1 - rho0)).real
    assert exact == pytest.approx(0.9, abs=1e-12)
    cert = minerr_oracle(overlap_pair, tol=1e-6)
    assert cert.primal_value - 1e-12 <= exact <= cert.dual_value + 1e-12
    assert cert.gap <= 1e-6


@settings(max_examples=25)
@given(seeds)
def test_minerr_certificate(seed):
    s = random_case(seed)
    cert = minerr_oracle(s, tol=1e-7, max_iters=50000)
    assert cert.gap <= 1e-7
    check_certificate(s, cert)


def test_rank_deficient_gram():
    s = StateSet.from_pure([[1, 0, 0, 0], [0.6, 0.8, 0, 0], [0, 0.6, 0.8, 0]], [0.3, 0.3, 0.4])
    cert = minerr_oracle(s, tol=1e-8, max_iters=50000)
    check_certificate(s, cert)
    cert = inc_oracle(s, 0.1, tol=1e-6, max_iters=50000)
    check_certificate(s, cert, cert.dual_scalar, 0.1)


def test_non_convergence_keeps_loose_certificate():
    s = random_state_set(4, 4, 2, 3)
    with pytest.raises(OracleNotConverged) as info:
        minerr_oracle(s, tol=1e-14, max_iters=20)
    cert = info.value.certificate
    assert cert.gap > 1e-14
    check_certificate(s, cert)


def test_inc_examples(orthogonal_pair, identical_pair):
    cert = inc_oracle(orthogonal_pair, 0.3)
    assert cert.primal_value == pytest.approx(0.7, abs=1e-6)
    assert cert.dual_value == pytest.approx(0.7, abs=1e-6)
    cert = inc_oracle(identical_pair, 0.1)
    assert cert.primal_value == pytest.approx(0.63, abs=1e-6)
    assert cert.dual_value == pytest.approx(0.63, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_inc_at_zero_rate_matches_minerr(seed):
    s = random_state_set(3, 3, 2, seed)
    me = minerr_oracle(s, tol=1e-8, max_iters=50000)
    inc = inc_oracle(s, 0.0, tol=1e-6, max_iters=50000)
    assert inc.primal_value <= me.dual_value + 1e-12
    assert me.primal_value <= inc.dual_value + 1e-12
    assert abs(inc.primal_value - me.primal_value) <= 1e-6


@settings(max_examples=20)
@given(seeds, st.floats(0, 0.3))
def test_inc_certificate(seed, p):
    s = random_case(seed)
    try:
        cert = inc_oracle(s, p, tol=1e-6, max_iters=20000)
    except OracleNotConverged as exc:
        cert = exc.certificate
    check_certificate(s, cert, cert.dual_scalar, p)
    assert probabilities(s, cert.povm).pi == pytest.approx(p, abs=1e-8)
    assert 0 <= cert.dual_scalar <= 1
    rep = pcuip(s, IncParams(p))
    assert rep.pclip <= cert.dual_value + 1e-9
    assert cert.primal_value <= rep.pcuip + 1e-9


def test_inc_full_rate():
    s = random_state_set(3, 3, 2, 1)
    cert = inc_oracle(s, 1.0)
    assert cert.primal_value == pytest.approx(0, abs=1e-9)
    assert cert.dual_value == pytest.approx(0, abs=1e-6)


def test_inc_rejects_bad_rate(orthogonal_pair):
    with pytest.raises(ValueError):
        inc_oracle(orthogonal_pair, 1.5)

"""
Bounds on the optimal success probability without inconclusive results.

The upper bound accumulates a dual-feasible operator one state at a time,

    X_0 = rho_0,   X_{m+1} = X_m + (rho_{m+1} - X_m)_+,

and reports ``Tr X_{M-1}``. The lower bound is the success probability of
the "staircase" POVM assembled from nested projectors read off the same
sequence of ``X_m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import (
    ETA,
    Array,
    dagger,
    inv_sqrt_psd,
    positive_part,
    proj_nonneg,
    proj_pos,
    proj_range,
    trace_positive_part,
)
from .states import Povm, StateSet, gram, probabilities


class ConsistencyError(ArithmeticError):
    """An internally constructed POVM failed validation; indicates eigensolver trouble."""


POVM_TOL = 1e-9


def dual_iterates(rhos: Array) -> Array:
    """The sequence ``X_0 .. X_{M-1}`` as an array of shape ``(M, N, N)``."""
    xs = np.empty_like(rhos)
    xs[0] = rhos[0]
    for m in range(len(rhos) - 1):
        xs[m + 1] = xs[m] + positive_part(rhos[m + 1] - xs[m])
    return xs


def pcup(states: StateSet) -> tuple[float, Array]:
    """
    Upper bound ``Tr X_{M-1}`` for the states in their given order.

    Returns the bound and the iterates. The value is a dual objective and
    is never clamped to 1.
    """
    xs = dual_iterates(states.rhos)
    return float(np.trace(xs[-1]).real), xs


def pcup_prime(states: StateSet) -> tuple[float, int]:
    """Minimum of :func:`pcup` over the ``M`` sets obtained by swapping state 0 with state k."""
    values = [pcup(states.swapped(k) if k else states)[0] for k in range(states.size)]
    k = int(np.argmin(values))
    return values[k], k


def qiu_bound(states: StateSet) -> float:
    """``min_k [xi_k + sum_{m != k} Tr(rho_m - rho_k)_+]``."""
    rhos = states.rhos
    best = np.inf
    for k in range(states.size):
        total = states.priors[k] + sum(
            trace_positive_part(rhos[m] - rhos[k]) for m in range(states.size) if m != k
        )
        best = min(best, total)
    return float(best)


class StaircaseFactors(NamedTuple):
    projectors: list[Array]
    """``e_1 .. e_top`` (index ``m - 1`` holds ``e_m``)."""
    products: list[Array]
    """``a_0 .. a_{M-1}`` with ``a_{m-1} = e_m a_m``."""


def _descend(rhos: Array, xs: Array, top: Array, eta: float):
    """
    Run the descending projector recursion from ``a_{M-1} = top``.

    Returns the ``M`` conclusive elements, the projectors ``e_1..e_{M-1}``
    and the products ``a_0..a_{M-1}``.
    """
    m_count, n = rhos.shape[:2]
    eye = np.eye(n)
    a = [None] * m_count
    e = [None] * m_count
    a[m_count - 1] = top
    for m in range(m_count - 1, 0, -1):
        am = a[m]
        e[m] = proj_nonneg(am @ (xs[m - 1] - rhos[m]) @ dagger(am), eta)
        a[m - 1] = e[m] @ am
    elements = np.empty_like(rhos)
    elements[0] = dagger(a[0]) @ a[0]
    for m in range(1, m_count):
        elements[m] = dagger(a[m]) @ (eye - e[m]) @ a[m]
    return elements, e[1:], a


def staircase_povm(
    states: StateSet, iterates: Array, eta: float = ETA
) -> tuple[Povm, StaircaseFactors]:
    """
    The staircase POVM ``Pi_0 = |a_0|^2``, ``Pi_m = |a_m|^2 - |a_{m-1}|^2``.

    Raises
    ------
    ConsistencyError
        If the assembled elements are not a valid POVM within 1e-9.
    """
    elements, es, as_ = _descend(states.rhos, iterates, np.eye(states.dim, dtype=complex), eta)
    povm = Povm(elements)
    bad = povm.violation()
    if bad > POVM_TOL:
        raise ConsistencyError(f"staircase POVM invalid by {bad:.3e}")
    return povm, StaircaseFactors(list(es), list(as_))


def pclp(states: StateSet, iterates: Array | None = None, eta: float = ETA) -> float:
    """Lower bound: success probability of the staircase POVM."""
    if iterates is None:
        iterates = dual_iterates(states.rhos)
    povm, _ = staircase_povm(states, iterates, eta)
    return probabilities(states, povm).pc


def srm(states: StateSet, eta: float = ETA) -> tuple[Povm, float]:
    """
    Square-root measurement ``G^{-1/2} rho_m G^{-1/2}``.

    The inverse root is taken on the support of ``G``; the kernel
    projector is added to element 0 so the result sums to identity.
    It carries no weight from any state.
    """
    g = gram(states)
    root, deficient = inv_sqrt_psd(g, eta)
    elements = root @ states.rhos @ root
    if deficient:
        elements[0] += np.eye(states.dim) - proj_pos(g, eta)
    povm = Povm(elements)
    return povm, probabilities(states, povm).pc


class AttainabilityCertificate(NamedTuple):
    attained: bool
    gap: float
    commute_residuals: list[float]
    """Frobenius residuals for m = 1 .. M-2."""
    support_condition: list[bool]
    """Equal-support hypothesis, m = 1 .. M-1."""


def attainability_certificate(
    states: StateSet, tol: float = 1e-8, eta: float = ETA
) -> AttainabilityCertificate:
    """
    Certify whether the upper bound equals the optimum.

    ``attained`` is decided constructively: the staircase POVM is
    feasible, so ``pcup - pclp <= tol`` proves ``pcup`` is optimal to
    within ``tol``. The commutation residuals and the support test are
    diagnostics of why a gap remains.
    """
    value, xs = pcup(states)
    povm, factors = staircase_povm(states, xs, eta)
    lower = probabilities(states, povm).pc
    gap = value - lower
    rhos = states.rhos
    a = factors.products
    residuals = []
    for m in range(1, states.size - 1):
        lhs = a[m] @ positive_part(xs[m - 1] - rhos[m]) @ dagger(a[m])
        rhs = positive_part(a[m] @ (xs[m - 1] - rhos[m]) @ dagger(a[m]))
        residuals.append(float(np.linalg.norm(lhs - rhs)))
    support = []
    for m in range(1, states.size):
        p1 = proj_range(a[m] @ (xs[m - 1] - rhos[m]) @ dagger(a[m]), eta)
        p2 = proj_range(a[m] @ xs[m] @ dagger(a[m]), eta)
        support.append(bool(np.linalg.norm(p1 - p2, 2) <= 1e-6))
    return AttainabilityCertificate(gap <= tol, float(gap), residuals, support)


@dataclass
class BoundReport:
    pcup: float
    pcup_prime: float
    pcup_prime_index: int
    qiu: float
    pclp: float
    srm_value: float
    attained: bool
    gap: float
    iterates: Array
    staircase: Povm
    commute_residuals: list[float]

    @property
    def pcup_exceeds_one(self) -> bool:
        return self.pcup > 1.0 + 1e-12

    def as_dict(self) -> dict:
        return {
            "pcup": self.pcup,
            "pcup_prime": self.pcup_prime,
            "pcup_prime_index": self.pcup_prime_index,
            "qiu": self.qiu,
            "pclp": self.pclp,
            "srm": self.srm_value,
            "attained": self.attained,
            "gap": self.gap,
            "pcup_exceeds_one": self.pcup_exceeds_one,
            "commute_residuals": self.commute_residuals,
        }


def minerr_bounds(states: StateSet, tol: float = 1e-8, eta: float = ETA) -> BoundReport:
    """Compute every minimum-error bound for ``states``."""
    value, xs = pcup(states)
    prime, k = pcup_prime(states)
    povm, _ = staircase_povm(states, xs, eta)
    lower = probabilities(states, povm).pc
    cert = attainability_certificate(states, tol, eta)
    return BoundReport(
        pcup=value,
        pcup_prime=prime,
        pcup_prime_index=k,
        qiu=qiu_bound(states),
        pclp=lower,
        srm_value=srm(states, eta)[1],
        attained=cert.attained,
        gap=cert.gap,
        iterates=xs,
        staircase=povm,
        commute_residuals=cert.commute_residuals,
    )

"""
Reference solver with primal/dual certificates.

The primal side runs the fixed-point iteration

    Pi_m <- L rho_m Pi_m rho_m L,   L = (sum_k rho_k Pi_k rho_k)^{-1/2},

from ``Pi_m = I / M``. The dual side turns the current iterate into a
feasible ``Z`` (``Z >= rho_m`` for all m) so that ``Tr Z`` is a certified
upper bound. Correctness rests on the certificate, not on convergence
of the iteration: the optimum always lies in ``[primal, dual]``.

All work happens on the support of ``G``; returned operators are lifted
back to the full space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import ETA, Array, positive_part, support_frame
from .states import Povm, StateSet, gram, probabilities

# inner iterations per point while bracketing; points near a rate jump
# converge slowly and only their rate is needed at that stage
SEARCH_BUDGET = 2000


@dataclass
class OracleCertificate:
    primal_value: float
    dual_value: float
    povm: Povm
    dual_operator: Array
    dual_scalar: float = 0.0
    p: float = 0.0
    iterations: int = 0

    @property
    def gap(self) -> float:
        return self.dual_value - self.primal_value

    def as_dict(self) -> dict:
        return {
            "primal": self.primal_value,
            "dual": self.dual_value,
            "gap": self.gap,
            "a": self.dual_scalar,
            "p": self.p,
            "iterations": self.iterations,
        }


class OracleNotConverged(ArithmeticError):
    """The certified gap is still above tolerance; ``certificate`` holds usable loose bounds."""

    def __init__(self, certificate: OracleCertificate, tol: float):
        super().__init__(
            f"oracle gap {certificate.gap:.3e} > tol {tol:.1e} "
            f"(primal {certificate.primal_value:.12g}, dual {certificate.dual_value:.12g})"
        )
        self.certificate = certificate


def _inv_sqrt(s: Array) -> Array:
    w, v = np.linalg.eigh(s)
    cut = 1e-14 * max(w[-1], 1e-300)
    inv = np.where(w > cut, 1.0 / np.sqrt(np.maximum(w, cut)), 0.0)
    return (v * inv) @ v.conj().T


def _dual_repair(rhos: Array, povm: Array) -> Array:
    """
    Feasible ``Z >= rho_k`` for all k from a primal iterate.

    Starts at the Hermitian part of ``sum_k rho_k Pi_k`` and sweeps
    ``Z <- Z + (rho_k - Z)_+``; after the sweep ``Z`` dominates every
    ``rho_k`` because each step only adds a PSD term.
    """
    z = np.einsum("kij,kjl->il", rhos, povm)
    z = (z + z.conj().T) / 2
    for r in rhos:
        z = z + positive_part(r - z)
    return z


def fixed_point(rhos: Array, tol: float, max_iters: int, init: Array | None = None):
    """
    Maximize ``sum_k Tr(rho_k Pi_k)`` over POVMs for weighted states ``rhos``.

    ``rhos`` need not be normalized but their sum must be full rank.
    Returns ``(povm, primal, Z, dual, iterations)`` where ``Z`` is dual
    feasible, so ``primal <= optimum <= dual``. The gap is checked every
    10 iterations at first, then at intervals growing with the count.
    """
    k, n, _ = rhos.shape
    povm = np.broadcast_to(np.eye(n) / k, (k, n, n)).astype(complex) if init is None else init
    primal = dual = math.nan
    z = None
    next_check = min(10, max_iters)
    for it in range(1, max_iters + 1):
        rpr = rhos @ povm @ rhos
        root = _inv_sqrt(rpr.sum(axis=0))
        povm = root @ rpr @ root
        povm = 0.5 * (povm + povm.conj().swapaxes(1, 2))
        if it == next_check:
            primal = float(np.einsum("kij,kji->", rhos, povm).real)
            z = _dual_repair(rhos, povm)
            dual = float(np.trace(z).real)
            if dual - primal <= tol:
                break
            next_check = min(it + max(10, it // 5), max_iters)
    return povm, primal, z, dual, it


def _lift(v: Array, elements: Array, zero_slot: int = 0) -> Array:
    n = v.shape[0]
    full = v @ elements @ v.conj().T
    if v.shape[1] < n:
        full[zero_slot] += np.eye(n) - v @ v.conj().T
    return full


def minerr_oracle(states: StateSet, tol: float = 1e-6, max_iters: int = 10000, eta: float = ETA) -> OracleCertificate:
    """
    Certified optimal success probability without inconclusive results.

    Raises
    ------
    OracleNotConverged
        If the certified gap exceeds ``tol`` after ``max_iters`` iterations.
    """
    v = support_frame(gram(states), eta)
    rhos = v.conj().T @ states.rhos @ v
    elements, _, z, _, iters = fixed_point(rhos, tol, max_iters)
    povm = Povm(_lift(v, elements))
    dual_op = v @ z @ v.conj().T
    cert = OracleCertificate(
        primal_value=probabilities(states, povm).pc,
        dual_value=float(np.trace(dual_op).real),
        povm=povm,
        dual_operator=(dual_op + dual_op.conj().T) / 2,
        iterations=iters,
    )
    if cert.gap > tol:
        raise OracleNotConverged(cert, tol)
    return cert


def _best_mixture(pcs: np.ndarray, pis: np.ndarray, p: float) -> tuple[int, int, float, float]:
    """Pick candidates ``i`` (rate <= p) and ``j`` (rate >= p) whose mixture at rate p succeeds most."""
    lo = np.flatnonzero(pis <= p)
    hi = np.flatnonzero(pis >= p)
    ti, tj = pis[lo][:, None], pis[hi][None, :]
    ci, cj = pcs[lo][:, None], pcs[hi][None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(tj > ti, (p - ti) / (tj - ti), 0.0)
    value = (1 - w) * ci + w * cj
    i, j = np.unravel_index(np.argmax(value), value.shape)
    return int(lo[i]), int(hi[j]), float(w[i, j]), float(value[i, j])


def inc_oracle(
    states: StateSet,
    p: float,
    tol: float = 1e-6,
    max_iters: int = 10000,
    eta: float = ETA,
    width: float = 1e-8,
) -> OracleCertificate:
    """
    Certified optimal success probability at inconclusive rate ``p``.

    For fixed ``a`` the dual reduces to the minimum-error problem for the
    ``M + 1`` states ``{rho_0, .., rho_{M-1}, a G}``; the outer minimum of
    the (convex) dual over ``a`` lies in ``[0, 1]``. The inconclusive rate
    of the inner optimizer, minus ``p``, is a subgradient of the dual, so
    the search intersects supporting lines from either side of the
    minimizer, falling back to bisection when that stalls. The primal
    POVM is the best mixture, at rate exactly ``p``, of the POVMs met
    along the way.

    When the rate jumps across ``p`` the inner problem is degenerate
    near the minimizer and converges slowly there; the minimizer is then
    estimated by intersecting the two supporting lines of the dual from
    either side, and the inner problem is solved just beside it.
    Decisive points are polished with geometrically growing budgets up
    to ``max_iters``.

    Raises
    ------
    OracleNotConverged
        If the certified gap still exceeds ``tol``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"inconclusive probability p must lie in [0, 1], got {p}")
    g = gram(states)
    v = support_frame(g, eta)
    rhos = v.conj().T @ states.rhos @ v
    g_c = v.conj().T @ g @ v
    r = v.shape[1]
    m = states.size

    always_inc = np.zeros((m + 1, r, r), dtype=complex)
    always_inc[m] = np.eye(r)
    # one slot per candidate: a, compressed POVM, pc, pi, Z, dual objective, converged
    points: list[list] = [[None, always_inc, 0.0, 1.0, None, math.inf, False]]
    iterations = 0

    def solve(slot: list | None, a: float, inner_tol: float, budget: int) -> list:
        nonlocal iterations
        aug = np.concatenate([rhos, (a * g_c)[None]])
        if slot is not None:
            init = slot[1]
        else:
            near = min((q for q in points if q[0] is not None), key=lambda q: abs(q[0] - a), default=None)
            init = None if near is None else 0.98 * near[1] + 0.02 * np.eye(r) / (m + 1)
        elements, primal, z, dual, iters = fixed_point(aug, inner_tol, budget, init)
        iterations += iters
        joint = np.einsum("mij,kji->mk", rhos, elements).real
        pc, pi = float(np.trace(joint[:, :m])), float(joint[:, m].sum())
        new = [a, elements, pc, pi, z, dual - a * p, dual - primal <= inner_tol]
        if slot is None:
            points.append(new)
            return new
        slot[:] = new
        return slot

    def mixture():
        pcs = np.array([q[2] for q in points])
        pis = np.array([q[3] for q in points])
        return _best_mixture(pcs, pis, p)

    def best_dual() -> list:
        return min(points, key=lambda q: q[5])

    def gap() -> float:
        return best_dual()[5] - mixture()[3]

    def bracket() -> tuple[list | None, list | None]:
        # nearest trusted points with rate at most p / above p
        trusted = [q for q in points if q[0] is not None and q[6]]
        left = max((q for q in trusted if q[3] <= p), key=lambda q: q[0], default=None)
        right = min((q for q in trusted if q[3] > p), key=lambda q: q[0], default=None)
        return left, right

    def meet(left: list, right: list) -> float:
        # supporting lines of the dual: slope is the rate minus p
        s_l, s_r = left[3] - p, right[3] - p
        if s_r - s_l < 1e-12:
            return 0.5 * (left[0] + right[0])
        a = (right[5] - left[5] + s_l * left[0] - s_r * right[0]) / (s_l - s_r)
        return min(max(a, left[0]), right[0])

    def kink() -> tuple[float, float] | None:
        # the inner problem is degenerate where the rate jumps, so step off
        # the jump onto the flatter side by an amount costing a fraction of tol;
        # returns the point and the step
        left, right = bracket()
        if left is None or right is None:
            return None
        a = meet(left, right)
        s_l, s_r = left[3] - p, right[3] - p
        step = 0.3 * tol / max(min(-s_l, s_r), 1e-12)
        a = a - step if -s_l <= s_r else a + step
        return min(max(a, left[0]), right[0]), step

    inner_tol = 0.1 * tol
    search_budget = min(max_iters, SEARCH_BUDGET)

    def probe(a: float) -> bool:
        # a point still unconverged after one larger retry is taken to sit
        # on a rate jump and ends the search
        q = solve(None, a, inner_tol, search_budget)
        if not q[6] and search_budget < max_iters:
            solve(q, a, inner_tol, min(4 * search_budget, max_iters))
        return q[6]

    probe(0.0)
    # at a = 1, G dominates every rho_m: always answering inconclusive is
    # optimal with dual operator G itself
    exact = [1.0, always_inc, 0.0, 1.0, g_c, float(np.trace(g_c).real) - p, True]
    points.append(exact)
    widths = []
    while gap() > tol:
        left, right = bracket()
        if left is None or right is None or right[0] - left[0] <= width:
            break
        span = right[0] - left[0]
        widths.append(span)
        if len(widths) > 2 and span > 0.5 * widths[-3]:
            a = 0.5 * (left[0] + right[0])
        else:
            a = min(max(meet(left, right), left[0] + 1e-3 * span), right[0] - 1e-3 * span)
        if not probe(a):
            break

    kink_point = None
    budget = min(100, max_iters)
    while gap() > tol:
        k = kink()
        if k is not None and (kink_point is None or abs(kink_point[0] - k[0]) > 0.1 * k[1]):
            kink_point = solve(None, k[0], inner_tol, budget)
        i, j, _, _ = mixture()
        slots = (best_dual(), points[i], points[j], kink_point)
        polish = {id(q): q for q in slots if q is not None and q[0] is not None and q is not exact}
        for slot in polish.values():
            solve(slot, slot[0], inner_tol, budget)
        if budget == max_iters:
            break
        budget = min(4 * budget, max_iters)

    i, j, w, _ = mixture()
    mixed = (1.0 - w) * points[i][1] + w * points[j][1]
    povm = Povm(_lift(v, mixed, zero_slot=0), inconclusive=True)
    best = best_dual()
    dual_op = v @ best[4] @ v.conj().T
    cert = OracleCertificate(
        primal_value=probabilities(states, povm).pc,
        dual_value=best[5],
        povm=povm,
        dual_operator=(dual_op + dual_op.conj().T) / 2,
        dual_scalar=best[0],
        p=p,
        iterations=iterations,
    )
    if cert.gap > tol:
        raise OracleNotConverged(cert, tol)
    return cert

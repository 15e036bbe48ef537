"""
Bounds on the optimal success probability at a fixed inconclusive rate ``p``.

Given a dual-feasible ``X`` for the minimum-error problem (by default the
last upper-bound iterate), every ``a >= 0`` yields the upper bound

    s(a) = Tr X + Tr(a G - X)_+ - a p,

which is convex in ``a``. The rate functions

    tau(a)  = Tr[G P_>(a G - X)],   tau+(a) = Tr[G P_>=(a G - X)]

locate the minimizer (``tau(a) <= p <= tau+(a)``) and drive a
regula-falsi search over ``a``. The lower bound mixes two staircase-type
POVMs whose inconclusive rates bracket ``p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import ETA, Array, inv_sqrt_psd, min_eig, proj_nonneg, proj_pos, support_frame, trace_positive_part
from .minerr import POVM_TOL, ConsistencyError, _descend, dual_iterates
from .states import Povm, StateSet, gram, probabilities


class ContractError(ValueError):
    """A documented precondition does not hold."""


FEASIBILITY_FLOOR = 1e-9


@dataclass(frozen=True)
class IncParams:
    """
    Parameters of the inconclusive-rate search.

    ``eps`` pads the right end of the initial bracket; ``None`` selects
    ``1e-6 * max(1, lambda_max)`` of the whitened dual operator, doubled
    as needed until ``tau(a_R)`` reaches ``Tr G``.
    """

    p: float
    J: int = 3
    eps: float | None = None
    eta: float = ETA

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ContractError(f"inconclusive probability p must lie in [0, 1], got {self.p}")
        if self.J < 0:
            raise ContractError(f"iteration count J must be >= 0, got {self.J}")
        if self.eps is not None and not self.eps > 0:
            raise ContractError(f"eps must be positive, got {self.eps}")


def check_dual_feasible(states: StateSet, x_sopt: Array, floor: float = FEASIBILITY_FLOOR) -> None:
    """Raise :class:`ContractError` unless ``X - rho_m >= 0`` for every m (within ``floor``)."""
    for m, rho in enumerate(states.rhos):
        lam = min_eig(x_sopt - rho)
        if lam < -floor:
            raise ContractError(f"X is not dual feasible: lambda_min(X - rho_{m}) = {lam:.3e}")


def whitened_extremes(states: StateSet, x_sopt: Array, eta: float = ETA) -> tuple[float, float]:
    """Extreme eigenvalues of ``G^{-1/2} X G^{-1/2}`` restricted to the support of ``G``."""
    g = gram(states)
    v = support_frame(g, eta)
    root, _ = inv_sqrt_psd(v.conj().T @ g @ v, eta)
    w = root @ (v.conj().T @ x_sopt @ v) @ root
    lam = np.linalg.eigvalsh((w + w.conj().T) / 2)
    return float(lam[0]), float(lam[-1])


def _s(g: Array, x: Array, a: float, p: float) -> float:
    return float(np.trace(x).real) + trace_positive_part(a * g - x) - a * p


def _tau(g: Array, x: Array, a: float, eta: float) -> tuple[float, float]:
    h = a * g - x
    lo = float(np.trace(g @ proj_pos(h, eta)).real)
    hi = float(np.trace(g @ proj_nonneg(h, eta)).real)
    return lo, hi


def s_of_a(states: StateSet, x_sopt: Array, a: float, p: float) -> float:
    """
    ``Tr X + Tr(a G - X)_+ - a p``: an upper bound on the optimum at rate ``p``.

    Raises
    ------
    ContractError
        If ``a < 0`` or ``X`` is not dual feasible.
    """
    if a < 0:
        raise ContractError(f"a must be nonnegative, got {a}")
    check_dual_feasible(states, x_sopt)
    return _s(gram(states), x_sopt, a, p)


def tau(states: StateSet, x_sopt: Array, a: float, eta: float = ETA) -> tuple[float, float]:
    """``(tau(a), tau+(a))``: G-weight of the positive / nonnegative eigenspace of ``aG - X``."""
    if a < 0:
        raise ContractError(f"a must be nonnegative, got {a}")
    return _tau(gram(states), x_sopt, a, eta)


class Evaluation(NamedTuple):
    a: float
    s: float
    tau: float
    tau_plus: float


class Bracket(NamedTuple):
    a_left: float
    a_right: float
    tau_left: float
    tau_plus_right: float


@dataclass
class IncReport:
    p: float
    J: int
    pcuip: float
    pclip: float
    bracket: tuple[float, float]
    s_evaluations: list[Evaluation]
    povm_bullet: Povm
    history: list[Bracket] = field(default_factory=list)
    """Bracket after initialization and after each round."""

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "J": self.J,
            "pcuip": self.pcuip,
            "pclip": self.pclip,
            "bracket": list(self.bracket),
            "s_evaluations": [e._asdict() for e in self.s_evaluations],
        }


def _search(g: Array, x: Array, lam_min: float, lam_max: float, params: IncParams):
    p, eta = params.p, params.eta
    eps = params.eps if params.eps is not None else 1e-6 * max(1.0, lam_max)
    bound = 1.0 - p
    evals = []

    a_l = lam_min
    t_l, tp_l = _tau(g, x, a_l, eta)
    s_l = float(np.trace(x).real) - a_l * p
    bound = min(bound, s_l)
    evals.append(Evaluation(a_l, s_l, t_l, tp_l))

    a_r = lam_max + eps
    t_r, tp_r = _tau(g, x, a_r, eta)
    if params.eps is None:
        # with ill-conditioned G the padding can fall under the eigenvalue
        # threshold; widen it until the whole support counts as positive
        full = float(np.trace(g).real)
        for _ in range(64):
            if t_r >= full - 1e-12:
                break
            eps *= 2.0
            a_r = lam_max + eps
            t_r, tp_r = _tau(g, x, a_r, eta)
    s_r = a_r * (1.0 - p)
    bound = min(bound, s_r)
    evals.append(Evaluation(a_r, s_r, t_r, tp_r))

    history = [Bracket(a_l, a_r, t_l, tp_r)]
    for _ in range(params.J):
        denom = t_r - t_l
        if abs(denom) < 1e-12:
            a = 0.5 * (a_l + a_r)
        else:
            a = ((t_r - p) * a_l + (p - t_l) * a_r) / denom
        s = _s(g, x, a, p)
        t, tp = _tau(g, x, a, eta)
        bound = min(bound, s)
        evals.append(Evaluation(a, s, t, tp))
        if t <= p:
            a_l, t_l, tp_l = a, t, tp
        else:
            a_r, t_r, tp_r = a, t, tp
        history.append(Bracket(a_l, a_r, t_l, tp_r))
    return bound, (a_l, a_r), evals, history


def pcuip(states: StateSet, params: IncParams, x_sopt: Array | None = None) -> IncReport:
    """
    Upper and lower bounds at inconclusive rate ``params.p`` after ``params.J`` rounds.

    ``x_sopt`` replaces the default ``X_{M-1}`` (e.g. an exact dual optimum);
    it must be dual feasible. The lower bound always uses the staircase
    built from ``X_0 .. X_{M-1}``.
    """
    xs = dual_iterates(states.rhos)
    if x_sopt is None:
        x = xs[-1]
    else:
        x = np.asarray(x_sopt, dtype=complex)
        check_dual_feasible(states, x)
    g = gram(states)
    lam_min, lam_max = whitened_extremes(states, x, params.eta)
    bound, bracket, evals, history = _search(g, x, lam_min, lam_max, params)

    lower_bracket = bracket
    if x_sopt is not None:
        lo, hi = whitened_extremes(states, xs[-1], params.eta)
        lower_bracket = _search(g, xs[-1], lo, hi, params)[1]
    value, bullet = pclip(states, xs, params.p, *lower_bracket, eta=params.eta)
    return IncReport(params.p, params.J, bound, value, bracket, evals, bullet, history)


def pi_a_povm(states: StateSet, iterates: Array, a: float, eta: float = ETA) -> Povm:
    """
    The ``M + 1`` element POVM whose inconclusive element is ``P_>(a G - X_{M-1})``.

    Raises
    ------
    ConsistencyError
        If the assembled elements are not a valid POVM within 1e-9.
    """
    if a < 0:
        raise ContractError(f"a must be nonnegative, got {a}")
    g = gram(states)
    top = proj_nonneg(iterates[-1] - a * g, eta)
    conclusive, _, _ = _descend(states.rhos, iterates, top, eta)
    elements = np.concatenate([conclusive, (np.eye(states.dim) - top)[None]])
    povm = Povm(elements, inconclusive=True)
    bad = povm.violation()
    if bad > POVM_TOL:
        raise ConsistencyError(f"POVM for a={a} invalid by {bad:.3e}")
    return povm


def pclip(
    states: StateSet,
    iterates: Array,
    p: float,
    a_left: float,
    a_right: float,
    eta: float = ETA,
    slack: float = 1e-9,
) -> tuple[float, Povm]:
    """
    Lower bound at rate ``p`` from a bracket ``tau(a_left) <= p <= tau(a_right)``.

    The returned POVM is the convex combination of the two endpoint
    POVMs with inconclusive probability exactly ``p``.

    Raises
    ------
    ContractError
        If the bracket does not straddle ``p`` (within ``slack``).
    """
    left = pi_a_povm(states, iterates, a_left, eta)
    right = pi_a_povm(states, iterates, a_right, eta)
    t_l = probabilities(states, left).pi
    t_r = probabilities(states, right).pi
    if not (t_l <= p + slack and p <= t_r + slack):
        raise ContractError(
            f"bracket does not straddle p={p}: tau(a_left)={t_l:.12g}, tau(a_right)={t_r:.12g}"
        )
    if t_r > t_l:
        w_r = min(1.0, max(0.0, (p - t_l) / (t_r - t_l)))
        bullet = Povm((1.0 - w_r) * left.elements + w_r * right.elements, inconclusive=True)
    else:
        bullet = left
    return probabilities(states, bullet).pc, bullet

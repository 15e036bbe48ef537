"""State sets, POVMs and the basic probability functionals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from .linalg import ETA, Array, dagger, min_eig


class StateSetError(ValueError):
    """Structurally malformed state set or POVM."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateSet:
    """
    ``M`` weighted states ``rho_m = prior_m * sigma_m`` on a dimension-``N`` space.

    Construction checks structure only (shapes, finiteness, ``M >= 1``).
    Numerical invariants (positivity, unit traces, prior sum) are checked
    by :func:`validate`, so that invalid inputs can be diagnosed.
    """

    priors: npt.NDArray[np.float64]
    densities: Array
    rhos: Array = field(init=False, repr=False)

    def __post_init__(self):
        priors = np.array(self.priors, dtype=np.float64).reshape(-1)
        dens = np.array(self.densities, dtype=np.complex128)
        if priors.size == 0:
            raise StateSetError("state set is empty (M = 0)")
        if dens.ndim != 3 or dens.shape[1] != dens.shape[2] or dens.shape[1] == 0:
            raise StateSetError(f"densities must have shape (M, N, N), got {dens.shape}")
        if dens.shape[0] != priors.size:
            raise StateSetError(f"{priors.size} priors but {dens.shape[0]} densities")
        if not (np.all(np.isfinite(priors)) and np.all(np.isfinite(dens))):
            raise StateSetError("non-finite entries")
        object.__setattr__(self, "priors", _frozen(priors))
        object.__setattr__(self, "densities", _frozen(dens))
        object.__setattr__(self, "rhos", _frozen(priors[:, None, None] * dens))

    @classmethod
    def from_pure(cls, vectors, priors) -> StateSet:
        """Build from state vectors (rows); each is normalized."""
        vecs = np.array(vectors, dtype=np.complex128)
        vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        return cls(priors, np.einsum("mi,mj->mij", vecs, vecs.conj()))

    @property
    def dim(self) -> int:
        return self.densities.shape[1]

    @property
    def size(self) -> int:
        return self.priors.size

    def __len__(self) -> int:
        return self.size

    def swapped(self, k: int) -> StateSet:
        """The same set with states 0 and ``k`` exchanged."""
        order = np.arange(self.size)
        order[[0, k]] = order[[k, 0]]
        return StateSet(self.priors[order], self.densities[order])


@dataclass(frozen=True, eq=False)
class Povm:
    """
    Measurement elements, shape ``(K, N, N)``.

    With ``inconclusive=True`` the last element is the inconclusive outcome
    and ``K = M + 1``; otherwise ``K = M``.
    """

    elements: Array
    inconclusive: bool = False

    def __post_init__(self):
        el = np.array(self.elements, dtype=np.complex128)
        if el.ndim != 3 or el.shape[1] != el.shape[2] or el.shape[0] == 0:
            raise StateSetError(f"POVM elements must have shape (K, N, N), got {el.shape}")
        if self.inconclusive and el.shape[0] < 2:
            raise StateSetError("an inconclusive POVM needs at least two elements")
        object.__setattr__(self, "elements", _frozen((el + dagger(el)) / 2))

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __getitem__(self, m: int) -> Array:
        return self.elements[m]

    @property
    def conclusive(self) -> Array:
        return self.elements[:-1] if self.inconclusive else self.elements

    def violation(self) -> float:
        """Largest of: negativity of any element, entrywise deviation of the sum from identity."""
        neg = max(0.0, -min(min_eig(e) for e in self.elements))
        dev = float(np.max(np.abs(self.elements.sum(axis=0) - np.eye(self.dim))))
        return max(neg, dev)

    def is_valid(self, tol: float = 1e-9) -> bool:
        return self.violation() <= tol


class Check(NamedTuple):
    name: str
    passed: bool
    magnitude: float
    detail: str = ""


@dataclass
class Diagnostics:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            mark = "pass" if c.passed else "FAIL"
            lines.append(f"{mark}  {c.name}: {c.magnitude:.3e}" + (f"  {c.detail}" if c.detail else ""))
        return "\n".join(lines)


def validate(states: StateSet) -> Diagnostics:
    """Check every numerical invariant of a state set and report the violating magnitudes."""
    checks = []
    for m, (xi, sigma) in enumerate(zip(states.priors, states.densities)):
        asym = float(np.max(np.abs(sigma - sigma.conj().T)))
        scale = 1.0 + float(np.max(np.abs(sigma)))
        checks.append(Check(f"states[{m}].hermitian", asym <= 1e-12 * scale, asym))
        lam = min_eig((sigma + sigma.conj().T) / 2)
        checks.append(Check(f"states[{m}].positivity", lam >= -1e-10, lam, "minimum eigenvalue"))
        tr_err = abs(np.trace(sigma).real - 1.0)
        checks.append(Check(f"states[{m}].trace", tr_err <= 1e-10, tr_err, "|Tr sigma - 1|"))
        checks.append(Check(f"states[{m}].prior", xi > 0, float(xi), "prior must be positive"))
    total = float(states.priors.sum())
    checks.append(Check("prior_sum", abs(total - 1.0) <= 1e-10, total, "sum of priors"))
    tr_g = float(np.trace(gram(states)).real)
    checks.append(Check("gram_trace", abs(tr_g - 1.0) <= 1e-9, tr_g, "Tr G"))
    return Diagnostics(checks)


def gram(states: StateSet) -> Array:
    """``G = sum_m prior_m sigma_m``."""
    g = states.rhos.sum(axis=0)
    return (g + g.conj().T) / 2


class Probabilities(NamedTuple):
    pc: float
    pe: float
    pi: float


def probabilities(states: StateSet, povm: Povm) -> Probabilities:
    """Success, error and inconclusive probabilities of ``povm`` on ``states``."""
    if povm.dim != states.dim:
        raise StateSetError(f"dimension mismatch: states N={states.dim}, POVM N={povm.dim}")
    m = states.size
    expected = m + 1 if povm.inconclusive else m
    if len(povm) != expected:
        raise StateSetError(f"POVM has {len(povm)} elements, expected {expected}")
    # joint[m, k] = Tr(rho_m Pi_k)
    joint = np.einsum("mij,kji->mk", states.rhos, povm.elements).real
    pc = float(np.trace(joint[:, :m]))
    pe = float(joint[:, :m].sum() - pc)
    pi = float(joint[:, m].sum()) if povm.inconclusive else 0.0
    return Probabilities(pc, pe, pi)


def random_density(n: int, rank: int, rng: np.random.Generator) -> Array:
    """``A A^dagger / Tr(A A^dagger)`` with ``A`` an ``n x rank`` complex Ginibre matrix."""
    a = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = a @ a.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_state_set(n: int, m: int, rank: int, rng: np.random.Generator | int) -> StateSet:
    """
    Random set of ``m`` rank-``rank`` states in dimension ``n``.

    Densities are normalized complex Ginibre products; priors are
    normalized independent standard exponentials. Deterministic given
    ``rng`` (a generator or an integer seed).
    """
    if m < 1:
        raise ValueError("need at least one state")
    if not 1 <= rank <= n:
        raise ValueError(f"rank must satisfy 1 <= R <= N, got R={rank}, N={n}")
    rng = np.random.default_rng(rng)
    dens = np.array([random_density(n, rank, rng) for _ in range(m)])
    priors = rng.standard_exponential(m)
    return StateSet(priors / priors.sum(), dens)


def numerical_rank(a: Array, eta: float = ETA) -> int:
    w = np.linalg.eigvalsh(a)
    return int(np.sum(np.abs(w) > eta * max(1.0, float(np.max(np.abs(w))))))

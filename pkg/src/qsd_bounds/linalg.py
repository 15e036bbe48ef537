"""
Dense Hermitian matrix calculus.

Hermitian operators are plain ``numpy`` arrays of dtype ``complex128``.
Every routine here is a pure function; nothing is modified in place.

Eigenvalue classification uses a relative threshold: an eigenvalue
``lam`` of ``A`` counts as positive iff ``lam > eta * s`` and as
nonnegative iff ``lam >= -eta * s``, with ``s = max(1, spectral radius)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import numpy.typing as npt

ETA = 1e-9

Array = npt.NDArray[np.complex128]


class NotHermitianError(ValueError):
    """Raised when a matrix that must be Hermitian is not."""


class EigenError(ArithmeticError):
    """Eigendecomposition failed or its residual is out of budget."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class SpectralDecomposition(NamedTuple):
    eigenvalues: npt.NDArray[np.float64]
    """Real eigenvalues, sorted descending."""
    eigenvectors: Array
    """Orthonormal eigenvectors as columns, matching ``eigenvalues``."""


def hermitian(a, *, symmetrize: bool = False) -> Array:
    """
    Build a Hermitian operator from array-like input.

    Parameters
    ----------
    a : array_like
        Square matrix.
    symmetrize : bool, default False
        If True, return ``(a + a^dagger) / 2`` instead of checking.

    Raises
    ------
    NotHermitianError
        If ``a`` is not square, or not Hermitian within
        ``1e-12 * (1 + max|a_ij|)`` and ``symmetrize`` is False.
    """
    a = np.array(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise NotHermitianError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotHermitianError("matrix has non-finite entries")
    if symmetrize:
        return (a + a.conj().T) / 2
    scale = 1.0 + float(np.max(np.abs(a)))
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > 1e-12 * scale:
        raise NotHermitianError(f"matrix is not Hermitian: max |A - A^dagger| = {asym:.3e}")
    # exact Hermitian symmetry downstream
    return (a + a.conj().T) / 2


def dagger(a: Array) -> Array:
    return a.conj().swapaxes(-1, -2)


def eig_hermitian(a: Array) -> SpectralDecomposition:
    """
    Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Backed by LAPACK ``heevd`` through :func:`numpy.linalg.eigh`. The
    per-pair residual ``||A v - lam v||`` is checked against
    ``1e-10 * (1 + ||A||_F)``.
    """
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigensolver did not converge: {exc}") from exc
    w = w[::-1]
    v = v[:, ::-1]
    budget = 1e-10 * (1.0 + np.linalg.norm(a))
    residual = float(np.max(np.linalg.norm(a @ v - v * w, axis=0)))
    if not residual <= budget:
        raise EigenError("eigenpair residual exceeds budget", residual)
    return SpectralDecomposition(w, v)


def _scale(w: npt.NDArray[np.float64]) -> float:
    return max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0


def _from_spectrum(v: Array, w) -> Array:
    out = (v * w) @ v.conj().T
    return (out + out.conj().T) / 2


def positive_part(a: Array) -> Array:
    """Spectral truncation ``A_+``: keep positive eigenvalues, drop the rest."""
    w, v = np.linalg.eigh(a)
    return _from_spectrum(v, np.where(w > 0, w, 0.0))


def trace_positive_part(a: Array) -> float:
    """``Tr A_+`` without forming the operator."""
    w = np.linalg.eigvalsh(a)
    return float(np.sum(w[w > 0]))


def proj_pos(a: Array, eta: float = ETA) -> Array:
    """Projector onto eigenvectors with eigenvalue ``> eta * s``."""
    w, v = np.linalg.eigh(a)
    return _from_spectrum(v, (w > eta * _scale(w)).astype(float))


def proj_nonneg(a: Array, eta: float = ETA) -> Array:
    """Projector onto eigenvectors with eigenvalue ``>= -eta * s``."""
    w, v = np.linalg.eigh(a)
    return _from_spectrum(v, (w >= -eta * _scale(w)).astype(float))


def proj_range(a: Array, eta: float = ETA) -> Array:
    """Projector onto eigenvectors with ``|eigenvalue| > eta * s`` (the support)."""
    w, v = np.linalg.eigh(a)
    return _from_spectrum(v, (np.abs(w) > eta * _scale(w)).astype(float))


def inv_sqrt_psd(g: Array, eta: float = ETA) -> tuple[Array, bool]:
    """
    Pseudo inverse square root of a PSD matrix.

    Returns
    -------
    root : ndarray
        ``sum lam^{-1/2} v v^dagger`` over eigenvalues ``lam > eta * s``;
        kernel directions map to zero.
    rank_deficient : bool
        True when at least one eigenvalue was treated as zero.
    """
    w, v = np.linalg.eigh(g)
    keep = w > eta * _scale(w)
    inv = np.zeros_like(w)
    inv[keep] = w[keep] ** -0.5
    return _from_spectrum(v, inv), not bool(np.all(keep))


def extreme_eigs(a: Array) -> tuple[float, float]:
    """Return ``(lambda_min, lambda_max)``."""
    w = np.linalg.eigvalsh(a)
    return float(w[0]), float(w[-1])


def support_subset(a: Array, b: Array, eta: float = ETA) -> bool:
    """True iff the support of PSD ``a`` lies inside the support of PSD ``b``."""
    pa = proj_pos(a, eta)
    pb = proj_pos(b, eta)
    leak = (np.eye(a.shape[0]) - pb) @ pa
    return bool(np.linalg.norm(leak, 2) <= eta)


def is_psd(a: Array, floor: float) -> bool:
    """All eigenvalues ``>= -floor``."""
    return float(np.linalg.eigvalsh(a)[0]) >= -floor


def min_eig(a: Array) -> float:
    return float(np.linalg.eigvalsh(a)[0])


def is_projector(p: Array, atol: float = 1e-10) -> bool:
    return bool(
        np.allclose(p @ p, p, atol=atol, rtol=0) and np.allclose(p, p.conj().T, atol=atol, rtol=0)
    )


def support_frame(g: Array, eta: float = ETA) -> Array:
    """
    Orthonormal basis (columns) of the support of PSD ``g``.

    Columns are eigenvectors with eigenvalue ``> eta * s``, so
    ``V^dagger g V`` is diagonal and positive definite.
    """
    w, v = np.linalg.eigh(g)
    return v[:, w > eta * _scale(w)]

"""Finite-dimensional Hermitian and density-matrix algebra.

States are plain ``numpy`` complex arrays. Bipartite states use A-major
ordering: the basis index of ``|a>|b>`` is ``a * dim_b + b``.

Every spectral function goes through :func:`eigh`, so the tolerances below are
the only ones that matter for this module.
"""
from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10
EIGEN_CLAMP = 1e-10


class InvariantViolation(ValueError):
    """Input matrix is not Hermitian / not a valid state."""


class DimensionMismatch(ValueError):
    pass


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_matrix(m)
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise InvariantViolation(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return a


def check_density(rho, trace_tol: float = TRACE_TOL) -> np.ndarray:
    """Validate ``rho`` as a density matrix and return it as a complex array."""
    a = check_hermitian(rho)
    tr = np.trace(a).real
    if abs(tr - 1.0) > trace_tol:
        raise InvariantViolation(f"trace is {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(a)[0]
    if lam_min < -EIGEN_CLAMP:
        raise InvariantViolation(f"state has negative eigenvalue {lam_min:.3e}")
    return a


def eigh(m) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""
    a = check_hermitian(m)
    # symmetrize away the sub-tolerance anti-Hermitian residue
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return w, v


def clamp_spectrum(w: np.ndarray) -> np.ndarray:
    """Zero out eigenvalues in [-1e-10, 0); anything more negative is an error."""
    if w.size and w.min() < -EIGEN_CLAMP:
        raise InvariantViolation(f"eigenvalue {w.min():.3e} below clamp threshold")
    return np.where(w < 0.0, 0.0, w)


def spectral_apply(m, fn) -> np.ndarray:
    w, v = eigh(m)
    return (v * fn(w)) @ v.conj().T


def positive_part(m) -> np.ndarray:
    """``[m]_+``: keep the strictly positive part of the spectrum."""
    return spectral_apply(m, lambda w: np.where(w > 0.0, w, 0.0))


def trace_norm(m) -> float:
    w, _ = eigh(m)
    return float(np.sum(np.abs(w)))


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return min(1.0, 0.5 * trace_norm(a - b))


def min_eigenvalue(m) -> float:
    return float(eigh(m)[0][0])


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    return np.outer(psi, psi.conj())


def partial_trace(rho, dim_a: int, dim_b: int, keep: str = "A") -> np.ndarray:
    """Reduced state of a bipartite ``rho`` on ``keep`` (``"A"`` or ``"B"``)."""
    a = as_matrix(rho)
    if a.shape[0] != dim_a * dim_b:
        raise DimensionMismatch(
            f"state of dim {a.shape[0]} does not factor as {dim_a}x{dim_b}")
    t = a.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        return np.einsum("ibjb->ij", t)
    if keep == "B":
        return np.einsum("aiaj->ij", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def numerical_rank(rho, threshold: float = 1e-9) -> tuple[int, bool]:
    """Rank with eigenvalue cutoff ``threshold``.

    The flag is True when some eigenvalue lies within a factor of 10 of the
    cutoff, i.e. the rank is fragile.
    """
    w, _ = eigh(rho)
    near = bool(np.any((w > threshold / 10) & (w < threshold * 10)))
    return int(np.sum(w > threshold)), near


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_pure(dim: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_density(dim: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Induced-measure random state ``G G^*/Tr`` with a ``dim x rank`` Ginibre ``G``."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must be in [1, {dim}], got {rank}")
    rng = _rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


class PerturbationFailed(RuntimeError):
    pass


def random_perturbation(rho, eps_target: float, seed=None, toward=None,
                        max_attempts: int = 64) -> np.ndarray:
    """A state ``sigma`` with ``trace_distance(rho, sigma)`` in ``[0.9*eps, eps]``.

    ``sigma = (1-t) rho + t tau`` for a direction state ``tau``. The distance is
    ``t * T(rho, tau)``, which is monotone in ``t``; the weight is found by
    bisection. ``toward`` fixes the first direction; later attempts draw random
    states, alternating with the pure state on the least-populated eigenvector
    of ``rho`` (the farthest pure state from ``rho``).
    """
    if not 0.0 < eps_target <= 1.0:
        raise ValueError(f"eps_target must be in (0, 1], got {eps_target}")
    rho = as_matrix(rho)
    dim = rho.shape[0]
    rng = _rng(seed)
    lo_target, hi_target = 0.9 * eps_target, eps_target
    target = lo_target + (hi_target - lo_target) * rng.uniform(0.1, 0.9)
    for attempt in range(max_attempts):
        if attempt == 0 and toward is not None:
            tau = as_matrix(toward)
        elif attempt % 2 == 1:
            _, v = eigh(rho)
            tau = ket_to_dm(v[:, 0])
        else:
            tau = random_density(dim, int(rng.integers(1, dim + 1)), rng)
        if trace_distance(rho, tau) < lo_target:
            continue
        lo, hi = 0.0, 1.0
        for _ in range(80):
            t = 0.5 * (lo + hi)
            d = trace_distance(rho, (1 - t) * rho + t * tau)
            if lo_target <= d <= hi_target and abs(d - target) <= 1e-3 * eps_target:
                break
            if d < target:
                lo = t
            else:
                hi = t
        sigma = (1 - t) * rho + t * tau
        d = trace_distance(rho, sigma)
        if lo_target <= d <= hi_target:
            return sigma
    raise PerturbationFailed(
        f"could not reach trace distance {eps_target} after {max_attempts} attempts")

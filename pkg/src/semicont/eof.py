"""Entanglement of formation (discrete-ensemble version) and its continuity bounds.

Mixed-state values come from :func:`eof_upper`, which minimizes the average
marginal entropy over all ``m``-member pure-state ensembles of ``rho``. Every
such ensemble is ``x_k = sum_i U[k, i] w_i`` for an ``m x r`` isometry ``U`` and
the eigen-ensemble ``w_i = sqrt(lambda_i) v_i``; the search descends over
``U`` along the unitary group. The result is an upper bound on the true value.
:func:`eof_two_qubit_oracle` is the closed-form two-qubit value, kept
independent of the optimizer so the two can check each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import correction, h2, shannon_entropy
from .gibbs import HamiltonianSpectrum, max_entropy
from .operators import DimensionMismatch, check_density, eigh, numerical_rank, partial_trace

SUPPORT_CUTOFF = 1e-14
_SY = np.array([[0, -1j], [1j, 0]])
_SYSY = np.kron(_SY, _SY)


class InfeasibleEnsembleSize(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleDecomposition:
    weights: np.ndarray  # (m,)
    states: np.ndarray  # (m, dA*dB) unit vectors; zero rows where weight is 0

    def average_state(self) -> np.ndarray:
        return np.einsum("k,ka,kb->ab", self.weights, self.states, self.states.conj())


def eof_pure(psi, dim_a: int, dim_b: int) -> float:
    """Entropy of entanglement of a unit vector (via its Schmidt coefficients)."""
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    if psi.size != dim_a * dim_b:
        raise DimensionMismatch(f"vector of length {psi.size} is not {dim_a}x{dim_b}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"state vector has norm {norm!r}")
    s = np.linalg.svd(psi.reshape(dim_a, dim_b), compute_uv=False)
    return shannon_entropy(s ** 2)


def _safe_log(x: np.ndarray) -> np.ndarray:
    return np.log(np.where(x > 1e-300, x, 1.0))


def _xlogx(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x * _safe_log(x), 0.0)


def _objective(u: np.ndarray, w: np.ndarray, grad: bool = True):
    """Average marginal entropy of the ensemble ``U @ w`` and its gradient in ``U``.

    ``u``: (R, m, r) batch of isometries; ``w``: (r, dA, dB) eigen-ensemble.
    Each member contributes ``-Tr M ln M + p ln p`` with ``M = X X^*``
    unnormalized. The returned gradient ``G`` satisfies
    ``dF = Re Tr(G^* dU)``.
    """
    x = np.einsum("Rki,iab->Rkab", u, w)
    m = x @ np.conj(np.swapaxes(x, -1, -2))
    mu, q = np.linalg.eigh(m)
    mu = np.where(mu > 0, mu, 0.0)
    p = mu.sum(axis=-1)
    val = (-_xlogx(mu).sum(axis=-1) + _xlogx(p)).sum(axis=-1)
    if not grad:
        return val
    logm = (q * _safe_log(mu)[..., None, :]) @ np.conj(np.swapaxes(q, -1, -2))
    g = _safe_log(p)[..., None, None] * np.eye(w.shape[1]) - logm
    gx = g @ x
    return val, 2.0 * np.einsum("Rkcb,icb->Rki", gx, w.conj())


def _haar_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _cayley(a: np.ndarray, t: np.ndarray) -> np.ndarray:
    eye = np.eye(a.shape[-1])
    ta = 0.5 * t[:, None, None] * a
    return np.linalg.solve(eye + ta, eye - ta)


def _descend(u: np.ndarray, w: np.ndarray, maxiter: int, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Armijo gradient descent on ``U -> exp(-tA) U`` for a batch of starts.

    Each start keeps its own step size and stops on its own, so its trajectory
    does not depend on the rest of the batch.
    """
    n = u.shape[0]
    step = np.full(n, 0.5)
    stall = np.zeros(n, dtype=int)
    active = np.ones(n, dtype=bool)
    val, gr = _objective(u, w)
    for _ in range(maxiter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ua, ga = u[idx], gr[idx]
        a = ga @ np.conj(np.swapaxes(ua, -1, -2))
        a = a - np.conj(np.swapaxes(a, -1, -2))
        slope = 0.5 * np.sum(np.abs(a) ** 2, axis=(-1, -2))
        t = step[idx] * 2.0
        pending = slope > 1e-30
        new_u = ua.copy()
        new_val = val[idx].copy()
        for _ in range(60):
            pi = np.flatnonzero(pending)
            if pi.size == 0:
                break
            cand = _cayley(a[pi], t[pi]) @ ua[pi]
            cv = _objective(cand, w, grad=False)
            ok = cv <= val[idx][pi] - 1e-4 * t[pi] * slope[pi]
            new_u[pi[ok]] = cand[ok]
            new_val[pi[ok]] = cv[ok]
            pending[pi[ok]] = False
            t[pi[~ok]] *= 0.5
        gain = val[idx] - new_val
        stall[idx] = np.where(gain <= tol * (1.0 + np.abs(new_val)), stall[idx] + 1, 0)
        step[idx] = t
        u[idx] = new_u
        nv, ng = _objective(new_u, w)
        val[idx], gr[idx] = nv, ng
        active[idx] = (stall[idx] < 3) & (slope > 1e-30)
    return u, val


def eof_upper(rho, dim_a: int, dim_b: int, m: int | None = None, restarts: int = 32,
              seed=0, maxiter: int = 400) -> tuple[float, EnsembleDecomposition]:
    """Best ensemble average of marginal entropies over ``restarts`` descents.

    Start 0 is the eigen-ensemble; the others are Haar-random isometries drawn
    from independent child seeds, so the value is nonincreasing in
    ``restarts``.
    """
    rho = check_density(rho)
    if rho.shape[0] != dim_a * dim_b:
        raise DimensionMismatch(f"state dim {rho.shape[0]} is not {dim_a}x{dim_b}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    lam, vecs = eigh(rho)
    keep = lam > SUPPORT_CUTOFF
    lam, vecs = lam[keep], vecs[:, keep]
    r = lam.size
    m = r if m is None else m
    if m < r:
        raise InfeasibleEnsembleSize(f"ensemble size {m} is below rank {r}")
    w = (vecs * np.sqrt(lam)).T.reshape(r, dim_a, dim_b)
    starts = []
    for k, ss in enumerate(np.random.SeedSequence(seed).spawn(restarts)):
        if k == 0:
            starts.append(np.eye(m, dtype=np.complex128)[:, :r])
        else:
            starts.append(_haar_unitary(m, np.random.default_rng(ss))[:, :r])
    u = np.stack(starts)
    if r == m == 1:
        vals = _objective(u, w, grad=False)
    else:
        u, vals = _descend(u, w, maxiter, tol=1e-12)
    best = int(np.argmin(vals))
    # polar re-orthonormalization removes accumulated rounding drift
    left, _, right = np.linalg.svd(u[best], full_matrices=False)
    dec = _decomposition(left @ right, w)
    value = sum(float(p) * eof_pure(s, dim_a, dim_b)
                for p, s in zip(dec.weights, dec.states) if p > 0)
    return value, dec


def _decomposition(u: np.ndarray, w: np.ndarray) -> EnsembleDecomposition:
    x = np.einsum("ki,iab->kab", u, w).reshape(u.shape[0], -1)
    p = np.sum(np.abs(x) ** 2, axis=1)
    states = np.zeros_like(x)
    nz = p > 0
    states[nz] = x[nz] / np.sqrt(p[nz])[:, None]
    # renormalize the unit vectors exactly so eof_pure accepts them
    norms = np.linalg.norm(states[nz], axis=1)
    states[nz] /= norms[:, None]
    return EnsembleDecomposition(p / p.sum(), states)


def concurrence(rho) -> float:
    """Two-qubit concurrence from the spin-flipped spectrum."""
    rho = check_density(rho)
    if rho.shape != (4, 4):
        raise DimensionMismatch("concurrence is defined here for two qubits (4x4)")
    lam, v = eigh(rho)
    sq = (v * np.sqrt(np.clip(lam, 0, None))) @ v.conj().T
    # square roots of the spectrum of sqrt(rho) rho~ sqrt(rho), taken as singular
    # values so small ones are not lost to cancellation
    ev = np.linalg.svd(sq @ _SYSY @ sq.conj(), compute_uv=False)
    return max(0.0, float(ev[0] - ev[1] - ev[2] - ev[3]))


def eof_two_qubit_oracle(rho) -> float:
    """Closed-form two-qubit entanglement of formation in nats."""
    c = min(1.0, concurrence(rho))
    return h2(0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - c * c))))


def delta_from_eps(eps: float) -> float:
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps}")
    return math.sqrt(eps * (2.0 - eps))


def marginal_rank(rho, dim_a: int, dim_b: int, threshold: float = 1e-9) -> tuple[int, bool]:
    """Numerical rank of ``rho_A``; the flag marks eigenvalues near the cutoff."""
    return numerical_rank(partial_trace(rho, dim_a, dim_b, "A"), threshold)


def eof_bound_rank(rank_a: int, eps: float, variant: str = "new") -> float:
    """``delta ln(rank rho_A) + h2_tilde(delta)`` with ``delta = sqrt(eps(2-eps))``."""
    if rank_a < 1:
        raise ValueError("rank_a must be >= 1")
    d = delta_from_eps(eps)
    if d == 0.0:
        return 0.0
    return d * math.log(rank_a) + correction(d, variant)


def eof_bound_energy(spec: HamiltonianSpectrum, energy: float, eps: float,
                     variant: str = "new") -> float:
    """``delta F_H(E/delta) + h2_tilde(delta)`` for a marginal with ``Tr H rho_A <= E``."""
    if energy <= 0:
        raise ValueError("energy must be positive")
    d = delta_from_eps(eps)
    if d == 0.0:
        return 0.0
    return d * max_entropy(spec, energy / d) + correction(d, variant)

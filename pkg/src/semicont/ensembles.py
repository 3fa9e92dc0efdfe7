"""Discrete measure spaces carrying a state-valued kernel.

A :class:`DiscreteEnsemble` is a finite point set ``X`` (sigma-algebra = power
set) with a density matrix attached to each point. Probability measures on
``X`` are plain weight vectors; their barycenters form the state set studied
here. The module provides the Jordan split of ``mu - nu``, the three-state
decomposition ``rho = eps tau_+ + (1-eps) omega_*``,
``sigma = eps tau_- + (1-eps) omega_*``, an inner-approximation search for the
supremum of ``f`` over states ``varrho`` with ``eps varrho <= rho``, and the
resulting generic continuity bound.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .operators import DimensionMismatch, check_density, min_eigenvalue

MEASURE_TOL = 1e-12


class DegenerateDecomposition(ValueError):
    """``mu_rho == mu_sigma``: eps = 0 and tau_+/tau_- are undefined."""


@dataclass(frozen=True)
class DiscreteEnsemble:
    points: tuple
    kernel: np.ndarray  # shape (n, d, d)

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=np.complex128)
        if k.ndim != 3 or k.shape[1] != k.shape[2]:
            raise DimensionMismatch(f"kernel must have shape (n, d, d), got {k.shape}")
        if len(self.points) != k.shape[0]:
            raise DimensionMismatch(f"{len(self.points)} points but {k.shape[0]} kernel states")
        for m in k:
            check_density(m)
        k.setflags(write=False)
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "kernel", k)

    @classmethod
    def from_states(cls, states: Sequence, points: Sequence | None = None) -> "DiscreteEnsemble":
        states = [np.asarray(s, dtype=np.complex128) for s in states]
        if points is None:
            points = tuple(range(len(states)))
        return cls(tuple(points), np.stack(states))

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    @property
    def dim(self) -> int:
        return self.kernel.shape[1]


@dataclass(frozen=True)
class LaaFunction:
    """A state function with its concavity/convexity defects ``a_f`` and ``b_f``."""

    f: Callable[[np.ndarray], float]
    a: Callable[[float], float]
    b: Callable[[float], float]
    name: str = "f"

    def __post_init__(self):
        if self.a(0.0) != 0.0 or self.b(0.0) != 0.0:
            raise ValueError("moduli must vanish at 0")


def check_measure(mu, n: int | None = None) -> np.ndarray:
    w = np.asarray(mu, dtype=float).ravel()
    if n is not None and w.size != n:
        raise DimensionMismatch(f"measure has {w.size} weights, expected {n}")
    if w.size and w.min() < 0:
        raise ValueError("measure has negative weights")
    if abs(w.sum() - 1.0) > MEASURE_TOL:
        raise ValueError(f"measure sums to {w.sum()!r}")
    return w


def barycenter(ens: DiscreteEnsemble, mu) -> np.ndarray:
    return _integrate(ens, check_measure(mu, ens.size))


def _integrate(ens: DiscreteEnsemble, weights: np.ndarray) -> np.ndarray:
    # sub-normalized weights allowed: used for eps*tau_+ and friends
    return np.tensordot(weights, ens.kernel, axes=1)


def jordan_decompose(mu, nu) -> tuple[np.ndarray, np.ndarray, float]:
    """Positive part, negative part and total mass ``TV(mu, nu)`` of ``mu - nu``."""
    mu, nu = np.asarray(mu, dtype=float), np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise DimensionMismatch(f"measures have shapes {mu.shape} and {nu.shape}")
    diff = mu - nu
    plus = np.where(diff > 0, diff, 0.0)
    minus = np.where(diff < 0, -diff, 0.0)
    return plus, minus, float(plus.sum())


def tv(mu, nu) -> float:
    mu, nu = np.asarray(mu, dtype=float), np.asarray(nu, dtype=float)
    return 0.5 * float(np.abs(mu - nu).sum())


@dataclass(frozen=True)
class Decomposition:
    eps: float
    tau_plus: np.ndarray
    tau_minus: np.ndarray
    omega_star: np.ndarray | None
    nu_plus: np.ndarray
    nu_minus: np.ndarray
    mu_star: np.ndarray | None

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        rho = self.eps * self.tau_plus
        sigma = self.eps * self.tau_minus
        if self.omega_star is not None:
            rho = rho + (1 - self.eps) * self.omega_star
            sigma = sigma + (1 - self.eps) * self.omega_star
        return rho, sigma


def split_common_part(ens: DiscreteEnsemble, mu_rho, mu_sigma) -> Decomposition:
    """Split two barycenters over a common part.

    With ``eps = TV(mu_rho, mu_sigma)``, ``nu_+/- = [mu_rho - mu_sigma]_+/- / eps``
    and ``mu_* = min(mu_rho, mu_sigma) / (1 - eps)``, the barycenters satisfy
    ``rho = eps tau_+ + (1-eps) omega_*`` and ``sigma = eps tau_- + (1-eps) omega_*``.
    ``omega_*`` is None when the measures are mutually singular (eps = 1).
    """
    mu_rho = check_measure(mu_rho, ens.size)
    mu_sigma = check_measure(mu_sigma, ens.size)
    plus, minus, eps = jordan_decompose(mu_rho, mu_sigma)
    if min(plus.sum(), minus.sum()) <= 1e-14:
        # equal up to normalization rounding
        raise DegenerateDecomposition("measures coincide; eps = 0")
    nu_plus = plus / plus.sum()
    nu_minus = minus / minus.sum()
    common = np.minimum(mu_rho, mu_sigma)
    if common.sum() > 0:
        mu_star = common / common.sum()
        omega = _integrate(ens, mu_star)
    else:
        eps, mu_star, omega = 1.0, None, None
    return Decomposition(eps, _integrate(ens, nu_plus), _integrate(ens, nu_minus),
                         omega, nu_plus, nu_minus, mu_star)


def domination_floor(ens: DiscreteEnsemble, mu_rho, mu_sigma) -> float:
    """Smallest eigenvalue over ``rho - eps tau_+``, ``sigma - eps tau_-``, ``rho - (1-eps) omega_*``."""
    dec = split_common_part(ens, mu_rho, mu_sigma)
    rho, sigma = barycenter(ens, mu_rho), barycenter(ens, mu_sigma)
    floors = [min_eigenvalue(rho - dec.eps * dec.tau_plus),
              min_eigenvalue(sigma - dec.eps * dec.tau_minus)]
    if dec.omega_star is not None:
        floors.append(min_eigenvalue(rho - (1 - dec.eps) * dec.omega_star))
    return min(floors)


def project_capped_simplex(v: np.ndarray, cap: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{x : 0 <= x <= cap, sum x = 1}``."""
    if cap.sum() < 1.0 - 1e-12:
        raise ValueError("capped simplex is empty")
    lo, hi = float((v - cap).min()) - 1.0, float(v.max())
    for _ in range(100):
        t = 0.5 * (lo + hi)
        if np.clip(v - t, 0.0, cap).sum() > 1.0:
            lo = t
        else:
            hi = t
    x = np.clip(v - 0.5 * (lo + hi), 0.0, cap)
    # absorb bisection residue into a coordinate with room to move
    r = 1.0 - x.sum()
    room = (cap - x) if r > 0 else x
    i = int(np.argmax(room))
    x[i] += r
    return x


def dominated_sup_estimate(ens: DiscreteEnsemble, f: LaaFunction, mu_rho, eps: float,
                           budget: int = 2000, seed=0) -> float:
    """Lower estimate of ``sup{f(varrho) : eps varrho <= rho}``.

    The search runs over measures ``nu`` with ``eps nu <= mu_rho`` pointwise,
    which implies the operator inequality. This is an inner approximation, so
    the returned value can undershoot the true supremum.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must be in (0, 1], got {eps}")
    mu_rho = check_measure(mu_rho, ens.size)
    cap = np.minimum(mu_rho / eps, 1.0)
    if cap.sum() <= 1.0 + 1e-12:
        return float(f.f(barycenter(ens, mu_rho)))
    rng = np.random.default_rng(seed)
    evals = 0

    def value(nu):
        nonlocal evals
        evals += 1
        return float(f.f(_integrate(ens, nu)))

    starts = [mu_rho.copy(), project_capped_simplex(np.full(ens.size, 1.0 / ens.size), cap)]
    best_nu, best = starts[0], value(starts[0])
    n_random = max(1, budget // 10)
    for k in range(n_random + 1):
        nu = starts[k] if k < 2 else project_capped_simplex(rng.dirichlet(np.ones(ens.size)), cap)
        v = value(nu)
        if v > best:
            best_nu, best = nu, v
        if evals >= budget // 2:
            break

    # coordinate ascent: shift mass between pairs of points
    nu, cur = best_nu.copy(), best
    while evals < budget and ens.size > 1:
        improved = False
        for i in range(ens.size):
            for j in range(ens.size):
                if i == j or evals >= budget:
                    continue
                room = min(nu[j], cap[i] - nu[i])
                if room <= 1e-15:
                    continue

                def neg(t, i=i, j=j):
                    trial = nu.copy()
                    trial[i] += t
                    trial[j] -= t
                    return -value(trial)

                res = minimize_scalar(neg, bounds=(0.0, room), method="bounded",
                                      options={"xatol": 1e-10, "maxiter": 30})
                if -res.fun > cur + 1e-15:
                    nu[i] += res.x
                    nu[j] -= res.x
                    cur = -res.fun
                    improved = True
        if not improved:
            break
    return max(best, cur)


def generic_bound(ens: DiscreteEnsemble, f: LaaFunction, mu_rho, mu_sigma,
                  cf_value: float) -> float:
    """``eps * cf_value + a_f(eps) + b_f(eps)`` with ``eps = TV(mu_rho, mu_sigma)``."""
    eps = tv(check_measure(mu_rho, ens.size), check_measure(mu_sigma, ens.size))
    if eps == 0.0:
        return 0.0
    return eps * cf_value + f.a(eps) + f.b(eps)


def monotone_envelope(values: Sequence[float]) -> np.ndarray:
    """Running maximum along an ascending eps-grid.

    Turns a bound valid at ``TV = eps`` into one valid for ``TV <= eps``.
    """
    return np.maximum.accumulate(np.asarray(values, dtype=float))


def random_measure(n: int, rng: np.random.Generator, sparse: bool = False) -> np.ndarray:
    if sparse and n > 1:
        support = rng.random(n) < 0.5
        if not support.any():
            support[rng.integers(n)] = True
        w = np.where(support, rng.exponential(size=n), 0.0)
        return w / w.sum()
    return rng.dirichlet(np.ones(n))


def laa_moduli_check(f: LaaFunction, ens: DiscreteEnsemble, samples: int = 1000,
                     seed=0) -> float:
    """Largest violation of the two mixing inequalities on sampled triples.

    States are barycenters of random measures over ``ens``; a quarter of the
    draws use point masses so kernel states themselves are probed.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        pair = []
        for _ in range(2):
            if rng.random() < 0.25:
                mu = np.zeros(ens.size)
                mu[rng.integers(ens.size)] = 1.0
            else:
                mu = random_measure(ens.size, rng, sparse=rng.random() < 0.5)
            pair.append(_integrate(ens, mu))
        rho, sigma = pair
        p = float(rng.random())
        mix = f.f(p * rho + (1 - p) * sigma)
        avg = p * f.f(rho) + (1 - p) * f.f(sigma)
        worst = max(worst, avg - f.a(p) - mix, mix - avg - f.b(p))
    return worst


def ensemble_from_json(obj: dict) -> DiscreteEnsemble:
    from .io import matrix_from_json

    return DiscreteEnsemble.from_states([matrix_from_json(m) for m in obj["kernel"]],
                                        obj.get("points"))


def ensemble_to_json(ens: DiscreteEnsemble) -> dict:
    from .io import matrix_to_json

    return {"points": list(ens.points), "kernel": [matrix_to_json(m) for m in ens.kernel]}


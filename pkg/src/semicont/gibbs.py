"""Maximum entropy under a mean-energy constraint.

A Hamiltonian enters only through its spectrum ``e_0 = 0 <= e_1 <= ...``.
Spectra are either explicit finite lists (a genuinely finite-dimensional
system) or generator rules truncated at ``n`` levels, standing in for an
unbounded operator. Truncated spectra carry a tail certificate
(:func:`check_gibbs_condition`) that every solve must pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .entropy import shannon_entropy
from .operators import DimensionMismatch, as_matrix, check_hermitian, positive_part

DEFAULT_TRUNCATION = 512
TAIL_RTOL = 1e-9
BRACKET_LO, BRACKET_HI = 2.0 ** -20, 2.0 ** 20
MAX_EXPANSIONS = 200
MAX_ITER = 200


class ConvergenceError(RuntimeError):
    """Truncated spectrum fails its tail certificate, or no bracket was found."""


class NoSolution(ValueError):
    pass


@dataclass(frozen=True)
class HamiltonianSpectrum:
    levels: np.ndarray
    kind: str = "list"
    truncated: bool = False
    rule: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    params: tuple = ()

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float).ravel()
        if lv.size == 0:
            raise ValueError("spectrum needs at least one level")
        if not np.all(np.isfinite(lv)):
            raise ValueError("spectrum levels must be finite")
        if np.any(np.diff(lv) < 0):
            raise ValueError("spectrum levels must be nondecreasing")
        if abs(lv[0]) > 1e-12:
            raise ValueError(f"ground level must be 0, got {lv[0]!r}")
        lv = lv.copy()
        lv[0] = 0.0
        lv.setflags(write=False)
        object.__setattr__(self, "levels", lv)

    @classmethod
    def from_levels(cls, levels) -> "HamiltonianSpectrum":
        return cls(np.asarray(levels, dtype=float))

    @classmethod
    def linear(cls, omega: float = 1.0, n: int = DEFAULT_TRUNCATION) -> "HamiltonianSpectrum":
        """Oscillator-like ``e_k = k * omega`` truncated at ``n`` levels."""
        if omega <= 0:
            raise ValueError("omega must be positive")
        rule = lambda k: omega * np.asarray(k, dtype=float)
        return cls(rule(np.arange(n)), kind="linear", truncated=True, rule=rule,
                   params=(("omega", omega), ("N", n)))

    @classmethod
    def from_rule(cls, rule, n: int = DEFAULT_TRUNCATION, name: str = "rule") -> "HamiltonianSpectrum":
        return cls(np.asarray(rule(np.arange(n)), dtype=float), kind=name,
                   truncated=True, rule=rule, params=(("N", n),))

    @property
    def n(self) -> int:
        return self.levels.size

    def level(self, k: int) -> float:
        """Level ``k``, computed from the rule past the truncation point."""
        if k < self.n:
            return float(self.levels[k])
        if self.rule is None:
            return math.inf
        return float(np.asarray(self.rule(np.array([k])))[0])

    def matrix(self) -> np.ndarray:
        return np.diag(self.levels).astype(np.complex128)

    @property
    def label(self) -> str:
        if self.kind == "list":
            return "list:" + ",".join(repr(float(x)) for x in self.levels)
        return self.kind + ":" + ",".join(f"{k}={v}" for k, v in self.params)

    def to_json(self) -> dict:
        if self.kind == "linear":
            d = dict(self.params)
            return {"kind": "linear", "omega": d["omega"], "N": d["N"]}
        return {"kind": "list", "levels": [float(x) for x in self.levels]}

    @classmethod
    def from_json(cls, obj: dict) -> "HamiltonianSpectrum":
        kind = obj.get("kind")
        if kind == "list":
            return cls.from_levels(obj["levels"])
        if kind == "linear":
            return cls.linear(float(obj.get("omega", 1.0)), int(obj.get("N", DEFAULT_TRUNCATION)))
        raise ValueError(f"unknown spectrum kind {kind!r}")


@dataclass(frozen=True)
class GibbsDiagnostic:
    passed: bool
    ratio: float
    beta: float
    n: int


def _log_z(levels: np.ndarray, beta: float) -> float:
    return float(logsumexp(-beta * levels))


def _probs(levels: np.ndarray, beta: float) -> np.ndarray:
    a = -beta * levels
    w = np.exp(a - a.max())
    return w / w.sum()


def _mean(levels: np.ndarray, beta: float) -> float:
    return float(_probs(levels, beta) @ levels)


def check_gibbs_condition(spec: HamiltonianSpectrum, beta_min: float,
                          n: int | None = None) -> GibbsDiagnostic:
    """Heuristic truncation certificate ``n e^{-beta e_n} <= 1e-9 Z_n``.

    Explicit finite spectra always pass. ``ratio`` is the left side over ``Z_n``.
    """
    if beta_min <= 0:
        raise ValueError("beta_min must be positive")
    n = spec.n if n is None else n
    if not spec.truncated and n >= spec.n:
        return GibbsDiagnostic(True, 0.0, beta_min, spec.n)
    levels = np.array([spec.level(k) for k in range(n)]) if n > spec.n else spec.levels[:n]
    tail = spec.level(n)
    log_ratio = math.log(n) - beta_min * tail - _log_z(levels, beta_min)
    ratio = math.exp(log_ratio) if log_ratio < 700 else math.inf
    return GibbsDiagnostic(ratio <= TAIL_RTOL, ratio, beta_min, n)


def _require_tail(spec: HamiltonianSpectrum, beta: float) -> None:
    if not spec.truncated:
        return
    if beta <= 0:
        raise ConvergenceError(f"truncated spectrum {spec.label} needs beta > 0, got {beta}")
    diag = check_gibbs_condition(spec, beta)
    if not diag.passed:
        raise ConvergenceError(
            f"truncation N={spec.n} too short at beta={beta:.6g} (tail ratio {diag.ratio:.3e})")


def partition_function(spec: HamiltonianSpectrum, beta: float) -> float:
    _require_tail(spec, beta)
    return float(np.exp(-beta * spec.levels).sum())


def mean_energy(spec: HamiltonianSpectrum, beta: float) -> float:
    _require_tail(spec, beta)
    return _mean(spec.levels, beta)


def solve_beta(spec: HamiltonianSpectrum, energy: float) -> float:
    """Inverse temperature whose Gibbs state has mean energy ``energy``.

    On a finite explicit spectrum, energies at or above the average level give
    ``beta <= 0``; callers needing a positive temperature must check.
    """
    if energy <= 0:
        raise NoSolution(f"energy must be positive, got {energy}")
    lv = spec.levels
    top = float(lv[-1])
    avg = float(lv.mean())
    if not spec.truncated and energy >= top:
        raise NoSolution(f"energy {energy} is not below the top level {top}")
    if spec.truncated and energy >= avg:
        raise ConvergenceError(
            f"energy {energy} not reachable with beta > 0 on {spec.n} levels; raise N")
    tol = 1e-10 * max(1.0, energy)
    f = lambda b: _mean(lv, b) - energy
    if energy == avg:
        beta = 0.0
    else:
        sign = 1.0 if energy < avg else -1.0
        lo, hi = sign * BRACKET_LO, sign * BRACKET_HI
        for _ in range(MAX_EXPANSIONS):
            if sign * f(lo) > 0:
                break
            lo /= 2.0
        else:
            raise ConvergenceError("no inner bracket endpoint found")
        for _ in range(MAX_EXPANSIONS):
            if sign * f(hi) < 0:
                break
            hi *= 2.0
        else:
            raise ConvergenceError(f"no bracket for energy {energy}")
        beta = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)
    if abs(f(beta)) > tol:
        raise ConvergenceError(f"solve_beta residual {abs(f(beta)):.3e} exceeds {tol:.1e}")
    _require_tail(spec, beta)
    return float(beta)


def gibbs_state(spec: HamiltonianSpectrum, energy: float) -> np.ndarray:
    """Diagonal of ``exp(-beta H)/Z`` at the solved ``beta``."""
    return _probs(spec.levels, solve_beta(spec, energy))


def max_entropy(spec: HamiltonianSpectrum, energy: float) -> float:
    """``sup S(rho)`` over states with ``Tr H rho <= energy`` (nats).

    Finite spectra with ``energy`` at or above the average level return
    ``ln N``: the maximally mixed state is feasible there.
    """
    if energy < 0:
        raise NoSolution(f"energy must be nonnegative, got {energy}")
    lv = spec.levels
    if energy == 0:
        return math.log(int(np.sum(lv == 0.0)))
    if not spec.truncated and energy >= lv.mean():
        return math.log(spec.n)
    return shannon_entropy(gibbs_state(spec, energy))


def energy(h, rho) -> float:
    """``Tr H rho`` for a spectrum (diagonal ``H``) or a Hermitian matrix."""
    hm = _as_hamiltonian(h, as_matrix(rho).shape[0])
    return float(np.real(np.trace(hm @ as_matrix(rho))))


def _as_hamiltonian(h, dim: int) -> np.ndarray:
    if isinstance(h, HamiltonianSpectrum):
        if h.n != dim:
            raise DimensionMismatch(f"spectrum has {h.n} levels, state has dim {dim}")
        return h.matrix()
    hm = check_hermitian(h)
    if hm.shape[0] != dim:
        raise DimensionMismatch(f"H has dim {hm.shape[0]}, state has dim {dim}")
    return hm


def energy_offset(h, rho, eps: float) -> float:
    """``Tr H [rho - eps I]_+``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps}")
    r = as_matrix(rho)
    hm = _as_hamiltonian(h, r.shape[0])
    pp = positive_part(r - eps * np.eye(r.shape[0]))
    return max(0.0, float(np.real(np.trace(hm @ pp))))

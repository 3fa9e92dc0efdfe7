"""Entropies and correction terms, all in nats."""
from __future__ import annotations

import math

import numpy as np

from .operators import EIGEN_CLAMP, clamp_spectrum, eigh

LN2 = math.log(2.0)


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    if p.size and p.min() < -EIGEN_CLAMP:
        raise ValueError(f"negative probability {p.min():.3e}")
    return float(-np.sum(_xlogx(np.clip(p, 0.0, None))))


def von_neumann_entropy(rho) -> float:
    """``-Tr rho ln rho`` with ``0 ln 0 = 0``."""
    w, _ = eigh(rho)
    return max(0.0, float(-np.sum(_xlogx(clamp_spectrum(w)))))


def h2(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log1p(-x)


def g_func(eps: float) -> float:
    """Old correction term ``(1+eps) h2(eps/(1+eps))``, defined for all ``eps >= 0``."""
    if eps < 0:
        raise ValueError(f"g needs eps >= 0, got {eps}")
    if eps == 0.0:
        return 0.0
    if math.isinf(eps):
        return math.inf
    # (1+e) h2(e/(1+e)) = (1+e) ln(1+e) - e ln e
    return (1.0 + eps) * math.log1p(eps) - eps * math.log(eps)


def h2_tilde(eps: float) -> float:
    """Binary entropy capped at ``ln 2`` from ``eps = 1/2`` on."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"h2_tilde needs eps in [0, 1], got {eps}")
    return h2(eps) if eps <= 0.5 else LN2


def check_joint(p, tol: float = 1e-12) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("joint distribution must be a matrix p[i, j]")
    if a.size and a.min() < 0:
        raise ValueError("joint distribution has negative weights")
    if abs(a.sum() - 1.0) > tol:
        raise ValueError(f"joint distribution sums to {a.sum()!r}")
    return a


def _pad(p: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    out = np.zeros(shape)
    out[: p.shape[0], : p.shape[1]] = p
    return out


def conditional_entropy(p) -> float:
    """``H(X1|X2) = H(X1,X2) - H(X2)``; rows index X1, columns X2."""
    a = check_joint(p)
    return max(0.0, shannon_entropy(a) - shannon_entropy(a.sum(axis=0)))


def tv_distance(p, q) -> float:
    a, b = check_joint(p), check_joint(q)
    shape = (max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1]))
    return min(1.0, 0.5 * float(np.abs(_pad(a, shape) - _pad(b, shape)).sum()))


def mean_value_x1(p) -> float:
    """``E(X1)`` where row ``i`` (1-based) carries the value ``i - 1``."""
    a = check_joint(p)
    return float(np.arange(a.shape[0]) @ a.sum(axis=1))


def read_joint_csv(path) -> np.ndarray:
    """Read ``i,j,p_ij`` rows (1-based indices) into a dense matrix."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line[0].isalpha():
                continue
            i, j, v = line.split(",")
            rows.append((int(i), int(j), float(v)))
    if not rows:
        raise ValueError(f"{path}: no entries")
    m = max(r[0] for r in rows)
    n = max(r[1] for r in rows)
    out = np.zeros((m, n))
    for i, j, v in rows:
        out[i - 1, j - 1] += v
    return check_joint(out)


def write_joint_csv(p, path) -> None:
    a = check_joint(p)
    with open(path, "w") as fh:
        fh.write("i,j,p_ij\n")
        for (i, j), v in np.ndenumerate(a):
            if v > 0:
                fh.write(f"{i + 1},{j + 1},{float(v)!r}\n")



def correction(eps: float, variant: str = "new") -> float:
    """Additive correction of a continuity bound: ``h2_tilde`` (new) or ``g`` (old)."""
    if variant == "new":
        return h2_tilde(eps)
    if variant == "old":
        return g_func(eps)
    raise ValueError(f"variant must be 'old' or 'new', got {variant!r}")

"""Closed-form continuity bounds and the old/new correction comparison."""
from __future__ import annotations

import logging
import math

import numpy as np

from .entropy import LN2, correction, g_func, h2, h2_tilde
from .gibbs import HamiltonianSpectrum, energy_offset, max_entropy

log = logging.getLogger(__name__)


def _check_eps(eps: float) -> None:
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must be in [0, 1], got {eps}")


def entropy_bound(spec: HamiltonianSpectrum, energy: float, eps: float,
                  variant: str = "new", use_offset: bool = False, rho=None) -> float:
    """Upper bound on ``S(rho) - S(sigma)`` for ``Tr H rho <= energy`` and trace distance ``eps``.

    ``eps * F_H(E_eff / eps) + correction(eps)``, where ``E_eff = energy`` or,
    with ``use_offset``, ``energy - Tr H [rho - eps I]_+``. ``variant="old"``
    swaps the ``h2_tilde`` correction for ``g``.
    """
    if energy <= 0:
        raise ValueError("energy must be positive")
    _check_eps(eps)
    if eps == 0.0:
        return 0.0
    e_eff = energy
    if use_offset:
        if rho is None:
            raise ValueError("use_offset needs the state rho")
        e_eff = energy - energy_offset(spec, rho, eps)
        if e_eff < 0:
            log.warning("offset energy %.3e is negative; clamped to 0", e_eff)
            e_eff = 0.0
    return eps * max_entropy(spec, e_eff / eps) + correction(eps, variant)


def capped_h2(x: float) -> float:
    """``h2`` up to 1/2, then ``ln 2``; defined on all of ``[0, inf)``."""
    return h2(x) if x <= 0.5 else LN2


def equivocation_bound(energy: float, eps: float, variant: str = "new",
                       first_term: str = "g") -> float:
    """Upper bound on ``H(X1|X2)_p - H(Y1|Y2)_q`` for ``E(X1) <= energy``, ``TV <= eps``.

    ``eps * g(energy/eps) + h2_tilde(eps)``. ``first_term="h2_tilde"`` replaces
    ``g`` in the first term with the capped binary entropy; that variant is
    not a valid bound and exists only to demonstrate it fails.
    """
    if energy <= 0:
        raise ValueError("energy must be positive")
    _check_eps(eps)
    if eps == 0.0:
        return 0.0
    if first_term == "g":
        lead = g_func(energy / eps)
    elif first_term == "h2_tilde":
        lead = capped_h2(energy / eps)
    else:
        raise ValueError(f"first_term must be 'g' or 'h2_tilde', got {first_term!r}")
    return eps * lead + correction(eps, variant)


def compare_corrections(grid) -> list[dict]:
    """Rows ``(eps, g, h2_tilde, gap, relative gap)`` for ``eps`` in ``(0, 1]``."""
    rows = []
    for eps in np.asarray(grid, dtype=float):
        if not 0.0 < eps <= 1.0:
            raise ValueError(f"grid points must lie in (0, 1], got {eps}")
        old, new = g_func(float(eps)), h2_tilde(float(eps))
        rows.append({"eps": float(eps), "g": old, "h2_tilde": new,
                     "gap": old - new, "rel_gap": (old - new) / old})
    return rows


def parse_grid(text: str) -> np.ndarray:
    """``"a:b:step"`` (inclusive of ``b``) or a comma list."""
    if ":" in text:
        a, b, step = (float(x) for x in text.split(":"))
        if step <= 0 or b < a:
            raise ValueError(f"bad grid {text!r}")
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return np.round(a + step * np.arange(n), 12)
    return np.array([float(x) for x in text.split(",") if x.strip()])

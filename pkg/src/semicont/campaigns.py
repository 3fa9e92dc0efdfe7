"""Monte-Carlo validity campaigns and report emission.

Every trial draws its own generator from ``(seed, trial)``, so a campaign is
reproducible trial by trial and reports come out in trial order. The left side
of each bound is evaluated at the *measured* distance between the two inputs,
and the bound is evaluated at that same distance.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import entropy_bound, equivocation_bound
from .entropy import conditional_entropy, mean_value_x1, tv_distance, von_neumann_entropy
from .eof import (eof_bound_energy, eof_bound_rank, eof_two_qubit_oracle, eof_upper,
                  marginal_rank)
from .gibbs import HamiltonianSpectrum, energy, gibbs_state
from .operators import (PerturbationFailed, eigh, ket_to_dm, partial_trace, random_density,
                        random_perturbation, random_pure, trace_distance)

SLACK_TOL = 1e-9
FAMILIES = ("entropy", "equivocation", "eof")


@dataclass
class BoundReport:
    family: str
    variant: str
    trial: int
    seed: int
    eps: float
    eps_target: float
    energy: float | None
    spectrum: str
    dims: str
    offset: bool
    bound_value: float
    lhs_value: float | None
    slack: float | None
    ratio: float | None
    monotone_envelope_applied: bool
    violations: int
    note: str = ""


FIELDS = [f.name for f in dataclasses.fields(BoundReport)]


def make_report(*, family, variant, trial, seed, eps, eps_target, bound, lhs,
                energy=None, spectrum="", dims="", offset=False, counted=True,
                note="") -> BoundReport:
    """Fill in slack, ratio and the violation flag.

    Reports with ``counted=False`` (one-sided estimates, demonstrations of
    invalid bounds) never register a violation.
    """
    slack = None if lhs is None else float(bound - lhs)
    ratio = None if lhs is None or bound <= 0 else float(lhs / bound)
    violated = counted and slack is not None and slack < -SLACK_TOL
    return BoundReport(family, variant, trial, seed, float(eps), float(eps_target),
                       None if energy is None else float(energy), spectrum, dims,
                       bool(offset), float(bound), None if lhs is None else float(lhs),
                       slack, ratio, False, int(violated), note)


@dataclass
class CampaignConfig:
    trials: int = 1000
    seed: int = 0
    dims: list = field(default_factory=lambda: [2, 4, 8, 16])
    eps_grid: list = field(default_factory=lambda: [0.02, 0.05, 0.1, 0.2, 0.3, 0.45, 0.6])
    energy_grid: list = field(default_factory=lambda: [0.1, 0.5, 1.0, 2.0])
    spectra: list = field(default_factory=lambda: ["linear", "random"])
    variants: list = field(default_factory=lambda: ["old", "new"])
    offsets: list = field(default_factory=lambda: [False, True])
    mode: str = "two-qubit"
    support: list = field(default_factory=lambda: [50, 8])
    restarts: int = 8
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name in ("dims", "eps_grid", "energy_grid", "spectra", "variants", "offsets"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        if any(not 0 < e <= 1 for e in self.eps_grid):
            raise ValueError("eps_grid values must lie in (0, 1]")
        if any(e <= 0 for e in self.energy_grid):
            raise ValueError("energy_grid values must be positive (ground energy is 0)")
        if self.mode not in ("two-qubit", "small-dim"):
            raise ValueError(f"unknown eof mode {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "CampaignConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def _grid_cycle(trial: int, *axes):
    combos = list(itertools.product(*axes))
    return combos[trial % len(combos)]


def perturb(rho, eps_target, rng, toward=None) -> tuple[np.ndarray, str]:
    """``random_perturbation`` with a fallback for out-of-reach targets.

    A state close to maximally mixed has no neighbour at large trace distance;
    the fallback is the farthest pure state, at distance ``1 - lambda_min``.
    """
    try:
        return random_perturbation(rho, eps_target, rng, toward=toward), ""
    except PerturbationFailed:
        _, v = eigh(rho)
        return ket_to_dm(v[:, 0]), "eps-unreachable"


def make_spectrum(kind: str, d: int, rng: np.random.Generator) -> HamiltonianSpectrum:
    if kind == "linear":
        return HamiltonianSpectrum.from_levels(np.arange(d, dtype=float))
    if kind == "random":
        return HamiltonianSpectrum.from_levels(
            np.concatenate([[0.0], np.sort(rng.uniform(0.0, d, d - 1))]))
    raise ValueError(f"unknown spectrum kind {kind!r}")


def _ground_mix(rho: np.ndarray, h: HamiltonianSpectrum, target: float) -> np.ndarray:
    """Mix ``rho`` with the ground state until its energy is ``target``."""
    e = energy(h, rho)
    if e <= target:
        return rho
    t = 1.0 - target / e
    ground = np.zeros_like(rho)
    ground[0, 0] = 1.0
    return (1 - t) * rho + t * ground


def sample_constrained_state(h: HamiltonianSpectrum, e_max: float,
                             rng: np.random.Generator) -> np.ndarray:
    """Random state with ``Tr H rho <= e_max``.

    Three recipes, picked at random: rejection sampling of random densities,
    a Gibbs-like diagonal state blended with a random state, and a random
    state pulled toward the ground state.
    """
    d = h.n
    mode = int(rng.integers(3))
    if mode == 0:
        for _ in range(32):
            rho = random_density(d, int(rng.integers(1, d + 1)), rng)
            if energy(h, rho) <= e_max:
                return rho
    elif mode == 1:
        target = e_max * rng.uniform(0.5, 1.0)
        if target < h.levels.mean():
            probs = gibbs_state(h, target)
        else:
            probs = np.full(d, 1.0 / d)
        w = rng.uniform(0.0, 0.3)
        rho = (1 - w) * np.diag(probs).astype(complex) + w * random_density(d, None, rng)
        return _ground_mix(rho, h, e_max)
    rho = random_density(d, int(rng.integers(1, d + 1)), rng)
    return _ground_mix(rho, h, e_max * rng.uniform(0.5, 1.0))


def verify_entropy(cfg: CampaignConfig) -> list[BoundReport]:
    reports = []
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, t)
        d, kind, e_max, eps_t = _grid_cycle(t, cfg.dims, cfg.spectra, cfg.energy_grid,
                                            cfg.eps_grid)
        h = make_spectrum(kind, d, rng)
        note = ""
        if t % 10 == 9:
            # thermal state against the ground state: near-saturating pair
            probs = gibbs_state(h, e_max) if e_max < h.levels.mean() else np.full(d, 1.0 / d)
            rho = np.diag(probs).astype(complex)
            sigma = np.zeros_like(rho)
            sigma[0, 0] = 1.0
            note = "adversarial"
        else:
            rho = sample_constrained_state(h, e_max, rng)
            choice = int(rng.integers(3))
            toward = None
            if choice == 1:
                toward = np.zeros((d, d), complex)
                toward[0, 0] = 1.0
            elif choice == 2:
                toward = ket_to_dm(random_pure(d, rng))
            sigma, note = perturb(rho, eps_t, rng, toward=toward)
        eps = trace_distance(rho, sigma)
        lhs = von_neumann_entropy(rho) - von_neumann_entropy(sigma)
        label = f"{kind}-d{d}"
        for variant in cfg.variants:
            for offset in cfg.offsets:
                b = entropy_bound(h, e_max, eps, variant, offset, rho)
                reports.append(make_report(
                    family="entropy-energy", variant=variant, trial=t, seed=cfg.seed,
                    eps=eps, eps_target=eps_t, bound=b, lhs=lhs, energy=e_max,
                    spectrum=label, dims=str(d), offset=offset, note=note))
    return reports


def sample_joint(max_rows: int, max_cols: int, e_max: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Random ``p[i, j]`` with ``E(X1) <= e_max``; row ``i`` carries value ``i``."""
    m = int(rng.integers(1, max_rows + 1))
    n = int(rng.integers(1, max_cols + 1))
    values = np.arange(m)
    mode = int(rng.integers(3))
    if mode == 0:
        rows = rng.dirichlet(np.full(m, rng.choice([0.2, 1.0, 5.0])))
    elif mode == 1:
        mean = e_max * rng.uniform(0.3, 1.0)
        rows = (mean / (1 + mean)) ** values
        rows /= rows.sum()
    else:
        rows = np.zeros(m)
        k = int(rng.integers(1, m + 1))
        rows[rng.choice(m, size=k, replace=False)] = rng.exponential(size=k)
        rows /= rows.sum()
    mean = float(values @ rows)
    cap = e_max * rng.uniform(0.5, 1.0)
    if mean > cap:
        t = 1.0 - cap / mean
        rows = (1 - t) * rows
        rows[0] += t
    cond = rng.dirichlet(np.full(n, rng.choice([0.3, 1.0, 3.0])), size=m)
    p = rows[:, None] * cond
    return p / p.sum()


def _pad(p: np.ndarray, shape) -> np.ndarray:
    out = np.zeros(shape)
    out[: p.shape[0], : p.shape[1]] = p
    return out


def tv_perturb(p: np.ndarray, eps_target: float, max_rows: int, max_cols: int,
               rng: np.random.Generator) -> np.ndarray:
    """``(1-t) p + t r`` with TV to ``p`` in ``[0.9 eps, eps]`` (TV is linear in ``t``)."""
    target = eps_target * rng.uniform(0.9, 1.0)
    for attempt in range(64):
        if attempt % 2 == 1:
            r = np.zeros((1, 1))
            r[0, 0] = 1.0
        else:
            rr = int(rng.integers(1, max_rows + 1))
            cc = int(rng.integers(1, max_cols + 1))
            r = rng.dirichlet(np.full(rr * cc, rng.choice([0.1, 1.0]))).reshape(rr, cc)
        shape = (max(p.shape[0], r.shape[0]), max(p.shape[1], r.shape[1]))
        pp, rp = _pad(p, shape), _pad(r, shape)
        base = 0.5 * float(np.abs(pp - rp).sum())
        if base >= target:
            q = (1 - target / base) * pp + (target / base) * rp
            return q / q.sum()
    raise RuntimeError(f"could not reach TV {eps_target}")


def verify_equivocation(cfg: CampaignConfig) -> list[BoundReport]:
    max_rows, max_cols = cfg.support
    reports = []
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, t)
        e_max, eps_t = _grid_cycle(t, cfg.energy_grid, cfg.eps_grid)
        p = sample_joint(max_rows, max_cols, e_max, rng)
        assert mean_value_x1(p) <= e_max + 1e-12
        q = tv_perturb(p, eps_t, max_rows, max_cols, rng)
        eps = tv_distance(p, q)
        lhs = conditional_entropy(p) - conditional_entropy(q)
        for variant in cfg.variants:
            reports.append(make_report(
                family="equivocation", variant=variant, trial=t, seed=cfg.seed, eps=eps,
                eps_target=eps_t, bound=equivocation_bound(e_max, eps, variant), lhs=lhs,
                energy=e_max, dims=f"{p.shape[0]}x{p.shape[1]}"))
    return reports


def probe_family(kind: str, e_max: float, eps: float) -> np.ndarray:
    """Row distribution with mass ``1 - eps`` at value 0 and ``eps`` spread above it.

    ``two-point``: all of ``eps`` at value ``floor(E/eps)``.
    ``spread``: ``eps`` uniform on values ``1..M``, the largest ``M`` with mean <= E.
    ``geometric``: ``eps`` geometric on values ``1, 2, ...`` with conditional
    mean ``E/eps`` (the entropy-maximizing tail), truncated.
    """
    scale = e_max / eps
    if kind == "two-point":
        k = max(1, int(math.floor(scale)))
        p = np.zeros(k + 1)
        p[k] = eps
    elif kind == "spread":
        big = max(1, int(math.floor(2 * scale - 1)))
        p = np.zeros(big + 1)
        p[1:] = eps / big
    elif kind == "geometric":
        mu = max(scale - 1.0, 0.0)
        if mu == 0.0:
            p = np.array([0.0, eps])
        else:
            r = mu / (1.0 + mu)
            k = int(math.ceil(math.log(1e-18) / math.log(r))) + 1
            tail = (1 - r) * r ** np.arange(k)
            p = np.concatenate([[0.0], eps * tail / tail.sum()])
    else:
        raise ValueError(f"unknown probe family {kind!r}")
    p[0] = 1.0 - eps
    if float(np.arange(p.size) @ p) > e_max * (1 + 1e-12):
        raise AssertionError("probe family breaks the mean constraint")
    return p[:, None]


def tightness_probe(energies, eps_grid, families=("two-point", "spread", "geometric"),
                    seed: int = 0) -> list[BoundReport]:
    """Compare ``H(p) - H(delta_0)`` against the valid bound and a g-free variant.

    The ``first-term-h2_tilde`` reports use ``h2_tilde`` in place of ``g`` in the
    first term; they are demonstrations and never count as violations.
    """
    reports = []
    trial = 0
    for e_max in energies:
        for eps in eps_grid:
            for kind in families:
                p = probe_family(kind, e_max, eps)
                q = np.zeros((1, 1))
                q[0, 0] = 1.0
                eps_m = tv_distance(p, q)
                lhs = conditional_entropy(p) - conditional_entropy(q)
                for first, variant, counted in (("g", "new", True),
                                                ("h2_tilde", "first-term-h2_tilde", False)):
                    b = equivocation_bound(e_max, eps_m, "new", first_term=first)
                    note = kind
                    if not counted and b - lhs < -SLACK_TOL:
                        note += ";invalid-bound-violated"
                    reports.append(make_report(
                        family="equivocation-probe", variant=variant, trial=trial, seed=seed,
                        eps=eps_m, eps_target=eps, bound=b, lhs=lhs, energy=e_max,
                        dims=f"{p.shape[0]}x1", counted=counted, note=note))
                trial += 1
    return reports


BELL = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def _sample_two_qubit(rng: np.random.Generator) -> np.ndarray:
    mode = int(rng.integers(3))
    if mode == 0:
        return random_density(4, int(rng.integers(1, 5)), rng)
    if mode == 1:
        p = rng.uniform(0.0, 1.0)
        return p * ket_to_dm(BELL) + (1 - p) * np.eye(4) / 4
    return ket_to_dm(random_pure(4, rng))


def verify_eof(cfg: CampaignConfig) -> list[BoundReport]:
    if cfg.mode == "small-dim":
        return _verify_eof_small(cfg)
    reports = []
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, t)
        (eps_t,) = _grid_cycle(t, cfg.eps_grid)
        note = ""
        if t % 10 == 9:
            rho = ket_to_dm(BELL)
            lam = min(1.0, eps_t / 0.75)
            sigma = (1 - lam) * rho + lam * np.eye(4) / 4
            note = "bell-depolarized"
        else:
            rho = _sample_two_qubit(rng)
            toward = np.eye(4) / 4 if rng.random() < 0.3 else None
            sigma, note = perturb(rho, eps_t, rng, toward=toward)
        eps = trace_distance(rho, sigma)
        lhs = eof_two_qubit_oracle(rho) - eof_two_qubit_oracle(sigma)
        rank_a, fragile = marginal_rank(rho, 2, 2)
        rank_note = note + (";rank-near-threshold" if fragile else "")
        e1 = 1.0 if rng.random() < 0.5 else float(rng.uniform(0.1, 3.0))
        h = HamiltonianSpectrum.from_levels([0.0, e1])
        e_marg = max(energy(h, partial_trace(rho, 2, 2, "A")), 1e-9)
        for variant in cfg.variants:
            reports.append(make_report(
                family="eof-rank", variant=variant, trial=t, seed=cfg.seed, eps=eps,
                eps_target=eps_t, bound=eof_bound_rank(rank_a, eps, variant), lhs=lhs,
                dims="2x2", spectrum=f"rankA={rank_a}", note=rank_note))
            reports.append(make_report(
                family="eof-energy", variant=variant, trial=t, seed=cfg.seed, eps=eps,
                eps_target=eps_t, bound=eof_bound_energy(h, e_marg, eps, variant), lhs=lhs,
                energy=e_marg, dims="2x2", spectrum=h.label, note=note))
    return reports


def _verify_eof_small(cfg: CampaignConfig) -> list[BoundReport]:
    """Differences of optimizer upper bounds: labeled estimates, never violations."""
    da, db = (cfg.dims + [cfg.dims[0]])[:2]
    reports = []
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, t)
        (eps_t,) = _grid_cycle(t, cfg.eps_grid)
        rho = random_density(da * db, int(rng.integers(1, da * db + 1)), rng)
        sigma, _ = perturb(rho, eps_t, rng)
        eps = trace_distance(rho, sigma)
        kw = dict(dim_a=da, dim_b=db, m=da * db, restarts=cfg.restarts)
        e_rho, _ = eof_upper(rho, seed=int(rng.integers(2**31)), **kw)
        e_sigma, _ = eof_upper(sigma, seed=int(rng.integers(2**31)), **kw)
        rank_a, _ = marginal_rank(rho, da, db)
        for variant in cfg.variants:
            reports.append(make_report(
                family="eof-rank", variant=variant, trial=t, seed=cfg.seed, eps=eps,
                eps_target=eps_t, bound=eof_bound_rank(rank_a, eps, variant),
                lhs=e_rho - e_sigma, dims=f"{da}x{db}", spectrum=f"rankA={rank_a}",
                counted=False, note="estimate-only"))
    return reports


def run_campaign(family: str, cfg: CampaignConfig) -> list[BoundReport]:
    runners = {"entropy": verify_entropy, "equivocation": verify_equivocation,
               "eof": verify_eof}
    if family not in runners:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(runners)}")
    return runners[family](cfg)


def summarize(reports: list[BoundReport]) -> dict:
    ratios = [r.ratio for r in reports if r.ratio is not None]
    return {"reports": len(reports),
            "violations": sum(r.violations for r in reports),
            "max_ratio": max(ratios) if ratios else None,
            "min_slack": min((r.slack for r in reports if r.slack is not None), default=None)}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def render_report(reports: list[BoundReport], fmt: str = "csv", scale: float = 1.0) -> str:
    """Serialize reports; ``scale`` divides entropic columns (bits display)."""
    if scale != 1.0:
        reports = [_rescale(r, scale) for r in reports]
    if fmt == "json":
        body = {"reports": [dataclasses.asdict(r) for r in reports],
                "summary": summarize(reports) if reports else None}
        return json.dumps(body, indent=1) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for r in reports:
        writer.writerow([_cell(getattr(r, f)) for f in FIELDS])
    if reports:
        s = summarize(reports)
        row = {f: "" for f in FIELDS}
        row.update(family="summary", trial=str(s["reports"]), violations=str(s["violations"]),
                   ratio=_cell(s["max_ratio"]), slack=_cell(s["min_slack"]))
        writer.writerow([row[f] for f in FIELDS])
    return buf.getvalue()


def _rescale(r: BoundReport, scale: float) -> BoundReport:
    div = lambda x: None if x is None else x / scale
    return dataclasses.replace(r, bound_value=r.bound_value / scale, lhs_value=div(r.lhs_value),
                               slack=div(r.slack))


def emit_report(reports: list[BoundReport], fmt: str, path, scale: float = 1.0) -> None:
    text = render_report(reports, fmt, scale)
    p = Path(path)
    try:
        p.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {p}: {exc.strerror}") from exc

"""Command-line interface.

    semicont gibbs --spec linear --energy 1
    semicont bound entropy --spec list:0,1 --energy 0.25 --eps 0.1 --variant old
    semicont bound eof-rank --rank 2 --eps 0.1
    semicont verify entropy --config cfg.json --output out.csv
    semicont compare --grid 0.1:1:0.1 --bits

Exit status: 0 success, 2 a campaign found violations, 1 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

from . import __version__
from .bounds import compare_corrections, entropy_bound, equivocation_bound, parse_grid
from .campaigns import CampaignConfig, render_report, run_campaign, summarize, tightness_probe
from .eof import eof_bound_energy, eof_bound_rank
from .gibbs import ConvergenceError, NoSolution, gibbs_state, max_entropy, solve_beta
from .io import load_matrix, parse_spectrum, read_json
from .operators import check_density

log = logging.getLogger("semicont")

EXIT_OK, EXIT_USAGE, EXIT_VIOLATIONS = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_options() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--format", choices=["json", "csv"], default=argparse.SUPPRESS)
    units = p.add_mutually_exclusive_group()
    units.add_argument("--nats", dest="units", action="store_const", const="nats",
                       default=argparse.SUPPRESS)
    units.add_argument("--bits", dest="units", action="store_const", const="bits",
                       default=argparse.SUPPRESS)
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = _Parser(prog="semicont", parents=[common],
                     description="Semicontinuity bounds for entropy-type quantities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gibbs", parents=[common], help="solve for the Gibbs state")
    g.add_argument("--spec", required=True, help="spectrum JSON file or shorthand")
    g.add_argument("--energy", type=float, required=True)

    b = sub.add_parser("bound", parents=[common], help="evaluate one bound")
    b.add_argument("family", choices=["entropy", "eof-rank", "eof-energy", "equivocation"])
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--energy", type=float)
    b.add_argument("--rank", type=int)
    b.add_argument("--spec")
    b.add_argument("--variant", choices=["old", "new"], default="new")
    b.add_argument("--offset-state", metavar="FILE",
                   help="matrix JSON of rho; applies the Tr H[rho - eps I]_+ offset")

    v = sub.add_parser("verify", parents=[common], help="run a validity campaign")
    v.add_argument("family", choices=["entropy", "equivocation", "eof", "equivocation-probe"])
    v.add_argument("--config", required=True, help="campaign config JSON")
    v.add_argument("--output", help="report path (default: config output, else stdout)")

    c = sub.add_parser("compare", parents=[common], help="tabulate g vs h2_tilde")
    c.add_argument("--grid", default="0.1:1:0.1", help="a:b:step or comma list")
    return parser


def _emit_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows if len(rows) != 1 else rows[0], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"bound {args.family} needs " + ", ".join("--" + m for m in missing))


def cmd_gibbs(args, scale: float) -> list[dict]:
    spec = parse_spectrum(args.spec)
    f_h = max_entropy(spec, args.energy)
    try:
        beta = solve_beta(spec, args.energy)
        state = [float(x) for x in gibbs_state(spec, args.energy)]
    except NoSolution:
        # energy at/above the top level: uniform state, infinite temperature
        beta, state = 0.0, [1.0 / spec.n] * spec.n
    capped = bool(not spec.truncated and args.energy >= spec.levels.mean())
    row = {"spectrum": spec.label, "energy": args.energy, "beta": beta,
           "max_entropy": f_h / scale, "uniform_cap": capped}
    if args.format == "json":
        # drop the tail that carries less than 1e-12 of the mass
        cum = 0.0
        for k, x in enumerate(state):
            cum += x
            if cum >= 1.0 - 1e-12:
                break
        row["state"] = state[: k + 1]
        row["state_levels_omitted"] = len(state) - (k + 1)
    return [row]


def cmd_bound(args, scale: float) -> list[dict]:
    fam = args.family
    row = {"family": fam, "variant": args.variant, "eps": args.eps}
    if fam == "entropy":
        _need(args, "spec", "energy")
        rho = None
        if args.offset_state:
            rho = check_density(load_matrix(args.offset_state))
        value = entropy_bound(parse_spectrum(args.spec), args.energy, args.eps, args.variant,
                              use_offset=rho is not None, rho=rho)
        row.update(energy=args.energy, offset=rho is not None)
    elif fam == "eof-rank":
        _need(args, "rank")
        value = eof_bound_rank(args.rank, args.eps, args.variant)
        row.update(rank=args.rank)
    elif fam == "eof-energy":
        _need(args, "spec", "energy")
        value = eof_bound_energy(parse_spectrum(args.spec), args.energy, args.eps, args.variant)
        row.update(energy=args.energy)
    else:
        _need(args, "energy")
        value = equivocation_bound(args.energy, args.eps, args.variant)
        row.update(energy=args.energy)
    row["bound"] = value / scale
    return [row]


def cmd_compare(args, scale: float) -> list[dict]:
    rows = compare_corrections(parse_grid(args.grid))
    for r in rows:
        for k in ("g", "h2_tilde", "gap"):
            r[k] /= scale
    return rows


def cmd_verify(args, scale: float) -> int:
    cfg_obj = read_json(args.config)
    if "seed" in args:
        cfg_obj["seed"] = args.seed
    if args.format is not None:
        cfg_obj["format"] = args.format
    cfg = CampaignConfig.from_dict(cfg_obj)
    if args.family == "equivocation-probe":
        reports = tightness_probe(cfg.energy_grid, cfg.eps_grid, seed=cfg.seed)
    else:
        reports = run_campaign(args.family, cfg)
    text = render_report(reports, cfg.format, scale)
    out = args.output or cfg.output
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {out}: {exc.strerror}") from exc
    else:
        sys.stdout.write(text)
    s = summarize(reports)
    log.info("%d reports, %d violations, max lhs/bound %s", s["reports"], s["violations"],
             s["max_ratio"])
    return EXIT_VIOLATIONS if s["violations"] else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.format = getattr(args, "format", None)
    units = getattr(args, "units", "nats")
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    scale = math.log(2.0) if units == "bits" else 1.0
    try:
        if args.command == "verify":
            return cmd_verify(args, scale)
        args.format = args.format or "json"
        handler = {"gibbs": cmd_gibbs, "bound": cmd_bound, "compare": cmd_compare}[args.command]
        sys.stdout.write(_emit_rows(handler(args, scale), args.format))
        return EXIT_OK
    except (UsageError, ValueError, NoSolution, ConvergenceError, OSError, KeyError) as exc:
        print(f"semicont: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""``bmtk`` command line.

Exit status: 0 when every checked property holds, 2 when one fails, 1 on
invalid input or I/O errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .config import ExperimentConfig
from .experiments import LEMMAS, RunDirectoryError, run_experiment
from .grid import Grid
from .morrey import BMParams, MorreyParams, WindowSet
from .paraproduct import MOSER_VARIANTS
from .reports import dumps


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1, not argparse's default 2 (reserved for failed checks)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _exponent(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _common(p: argparse.ArgumentParser, *, grid_default: int = 64, trials: bool = True):
    p.add_argument("--grid", "--N", dest="grid", type=int, default=grid_default, help="points per axis")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    if trials:
        p.add_argument("--trials", type=int, default=4)
    p.add_argument("--s", type=float, default=2.5)
    p.add_argument("--p", type=_exponent, default=4.0)
    p.add_argument("--q", type=_exponent, default=2.0)
    p.add_argument("--r", type=_exponent, default=2.0)
    p.add_argument("--homogeneous", action="store_true")
    p.add_argument("--stride", type=int, default=1, help="Morrey window centre stride")
    p.add_argument("--kmax", type=int, default=None, help="finest Morrey window level (radius L 2^-kmax)")
    p.add_argument("--modes", type=int, default=16, help="wavenumber box of random fields")
    p.add_argument("--slope", type=float, default=1.0, help="spectral slope of random fields")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--json-only", action="store_true", help="print only the JSON report")


def _flow_args(p: argparse.ArgumentParser, mhd: bool):
    _common(p, grid_default=64, trials=False)
    p.add_argument("--init", choices=("taylor-green", "random", "file"), default="taylor-green")
    p.add_argument("--field", type=Path, default=None, help="initial velocity for --init file")
    if mhd:
        p.add_argument("--binit", choices=("zero", "equal", "taylor-green", "random", "file"), default="zero")
        p.add_argument("--bfield", type=Path, default=None, help="initial magnetic field for --binit file")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--scheme", choices=("direct", "iterate"), default="direct")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=12)
    p.add_argument("--record-every", type=int, default=None, help="steps between stored snapshots")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bmtk", description="Besov-Morrey toolkit: norms, estimate checks, Euler/MHD runs.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("norms", help="Morrey and Besov-Morrey norms of a field file or a corpus")
    _common(p)
    p.add_argument("--field", type=Path, default=None)

    p = sub.add_parser("verify", help="evaluate one estimate over a random corpus")
    _common(p)
    p.add_argument("--lemma", required=True, help=f"one of {', '.join(LEMMAS)}")
    p.add_argument("--variant", default="R-E7", help=f"product-estimate form: {', '.join(MOSER_VARIANTS)}")
    p.add_argument("--dt", type=float, default=1e-3, help="trajectory step for the flow-map check")

    for name in ("euler", "mhd"):
        p = sub.add_parser(name, help=f"{name} solver runs")
        runs = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
        _flow_args(runs.add_parser("run", help="integrate and write a run directory"), mhd=name == "mhd")

    p = sub.add_parser("diagnose", help="re-check a run directory")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--json-only", action="store_true")

    p = sub.add_parser("corpus", help="write the deterministic test-field corpus")
    _common(p)
    return ap


def config_from_args(a: argparse.Namespace) -> ExperimentConfig:
    if a.command == "diagnose":
        return ExperimentConfig("diagnose", options={"run_dir": str(a.run_dir)})
    grid = Grid(a.dim, a.grid)
    bm = BMParams(a.s, MorreyParams(a.p, a.q), a.r, a.homogeneous)
    window = WindowSet(a.kmax, a.stride)
    opts = {"modes": a.modes, "slope": a.slope}
    kw = {}
    if a.command in ("norms", "corpus", "verify"):
        kw["trials"] = a.trials
    if a.command == "norms" and a.field is not None:
        opts["field"] = str(a.field)
    if a.command == "verify":
        opts.update(lemma=a.lemma, variant=a.variant)
        kw["dt"] = a.dt
    if a.command in ("euler", "mhd"):
        opts.update(init=a.init, scheme=a.scheme, amplitude=a.amplitude)
        if a.field is not None:
            opts["field"] = str(a.field)
        if a.command == "mhd":
            opts["binit"] = a.binit
            if a.bfield is not None:
                opts["bfield"] = str(a.bfield)
        if a.record_every is not None:
            opts["record_every"] = a.record_every
        kw.update(T=a.T, dt=a.dt, tol=a.tol, max_iter=a.max_iter)
    return ExperimentConfig(a.command, grid, bm, window, seed=a.seed, out=a.out, options=opts, **kw)


def _human(report: dict) -> str:
    lines = [f"command: {report.get('command')}  passed: {report.get('passed')}"]
    for key in ("summary",):
        if isinstance(report.get(key), dict):
            lines += [f"  {k}: {v}" for k, v in sorted(report[key].items())]
    for k in ("samples", "sup_vorticity_relative_drift", "bkm_integral_final", "count"):
        if k in report:
            lines.append(f"  {k}: {report[k]}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        status, report = run_experiment(cfg)
    except (ValueError, OSError, RunDirectoryError) as exc:
        print(f"bmtk: error: {exc}", file=sys.stderr)
        return 1
    if args.json_only:
        sys.stdout.write(dumps(report))
    else:
        print(_human(report))
        if cfg.out is not None:
            print(f"report written to {Path(cfg.out) / 'report.json'}")
    return status


if __name__ == "__main__":
    sys.exit(main())

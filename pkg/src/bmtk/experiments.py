"""Programmatic runners behind each CLI subcommand.

Every runner returns ``(status, report)`` and writes its artifacts under
``cfg.out`` when that is set. Status codes: 0 pass, 2 a checked property
failed. Configuration problems raise and are mapped to status 1 by the CLI.
Reports never contain timings or paths, so equal configs give equal bytes.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import corpus as cp
from .commutator import lemma34_report, lemma35_report
from .config import ExperimentConfig, worker_count
from .diagnostics import blowup_diagnostics
from .fieldio import read_field, write_field
from .flowmap import advect_trajectories, composition_norm_ratio, grid_seeds, volume_check
from .grid import GridError, divergence_defect
from .iteration import euler_iterate, mhd_iterate
from .morrey import (ParameterError, besov_infinity_norm, besov_morrey_norm, bernstein_ratios, lemma_ratio,
                     morrey_norm)
from .paraproduct import MOSER_VARIANTS, MoserSplit, moser_report
from .reports import config_hash, dumps
from .solver import FlowState, run_direct

LEMMAS = ("2.1", "2.3", "2.4", "2.5", "3.1", "3.2", "3.3", "3.4", "3.5")


def _ordered_map(fn, items):
    items = list(items)
    n = min(worker_count(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))


def _envelope(cfg: ExperimentConfig, **body) -> dict:
    return {"command": cfg.command, "config": cfg.to_dict(), "config_hash": cfg.hash, **body}


def _finish(cfg: ExperimentConfig, report: dict) -> tuple[int, dict]:
    if cfg.out is not None:
        _write_json(Path(cfg.out) / "report.json", report)
    return (0 if report.get("passed", True) else 2), report


def _finite(x) -> bool:
    return x is not None and math.isfinite(x)


# -- corpus --------------------------------------------------------------------


def generate_corpus(cfg: ExperimentConfig) -> cp.Corpus:
    """Deterministic corpus; with ``cfg.out`` set, fields and manifest are written there."""
    corp = cp.build_corpus(cfg.grid, cfg.seed, cfg.trials, cfg.modes, float(cfg.option("slope", 1.0)))
    if cfg.out is not None:
        root = Path(cfg.out)
        try:
            for e in corp.entries:
                write_field(root / "fields" / e.label.replace("/", "_"), cfg.grid, e.field)
            _write_json(root / "manifest.json", {**corp.manifest, "config_hash": cfg.hash})
        except OSError as exc:
            raise OSError(f"cannot write corpus under {root}: {exc}") from exc
    return corp


def run_corpus(cfg: ExperimentConfig) -> tuple[int, dict]:
    corp = generate_corpus(cfg)
    rows = [{"label": e.label, "sup": float(np.max(np.abs(e.field))), **e.meta} for e in corp.entries]
    return _finish(cfg, _envelope(cfg, entries=rows, count=len(rows), passed=True))


# -- norms ---------------------------------------------------------------------


def _norm_row(cfg: ExperimentConfig, label: str, f: np.ndarray) -> dict:
    g, bp, ws = cfg.grid, cfg.bm, cfg.window
    return {
        "label": label,
        "morrey": morrey_norm(g, f, bp.morrey, ws),
        "besov_morrey": besov_morrey_norm(g, f, bp, ws),
        "besov_morrey_homogeneous": besov_morrey_norm(g, f, bp.replace(homogeneous=True), ws),
        "besov_inf_inf": besov_infinity_norm(g, f, 0.0, math.inf),
    }


def run_norms(cfg: ExperimentConfig) -> tuple[int, dict]:
    path = cfg.option("field")
    if path:
        grid, f = read_field(path)
        if grid != cfg.grid:
            cfg = replace(cfg, grid=grid)
        items = [(Path(path).name, f)]
    else:
        items = [(e.label, e.field) for e in cp.build_corpus(cfg.grid, cfg.seed, cfg.trials, cfg.modes).entries]
    rows = _ordered_map(lambda it: _norm_row(cfg, *it), items)
    ok = all(_finite(r[k]) for r in rows for k in r if k != "label")
    return _finish(cfg, _envelope(cfg, rows=rows, passed=ok))


# -- verify --------------------------------------------------------------------


def _trial_fields(cfg: ExperimentConfig, t: int) -> dict:
    g, m = cfg.grid, cfg.modes
    slope = float(cfg.option("slope", 1.0))
    return {
        "f": cp.random_field(g, cp.trial_rng(cfg.seed, t, 0), m, slope),
        "g": cp.random_field(g, cp.trial_rng(cfg.seed, t, 1), m, slope),
        "v": cp.random_solenoidal(g, cp.trial_rng(cfg.seed, t, 2), m, slope),
        "theta": cp.random_solenoidal(g, cp.trial_rng(cfg.seed, t, 3), m, slope),
    }


def _flow_context(cfg: ExperimentConfig) -> dict:
    """Shear map on every node for the composition test, Taylor-Green seeds for the volume test."""
    g = cfg.grid
    T = float(cfg.option("flow_T", 0.5))
    dt = min(cfg.dt, 0.25 * g.spacing)
    shear = advect_trajectories(g, cp.shear_flow(g), grid_seeds(g), dt, T=T, jacobians=False)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2**32 - 1]))
    seeds = rng.uniform(0, g.length, size=(64, g.dim))
    tg = advect_trajectories(g, cp.taylor_green(g), seeds, dt, T=T)
    return {"shear": shear, "volume_defect": volume_check(tg), "T": T, "dt": dt}


def _verify_row(cfg: ExperimentConfig, lemma: str, t: int, ctx: dict) -> dict:
    g, bp, ws = cfg.grid, cfg.bm, cfg.window
    fl = _trial_fields(cfg, t)
    if lemma == "2.1":
        ratios = bernstein_ratios(g, fl["f"], bp.morrey, ws, k=int(cfg.option("order", 1)))
        vals = list(ratios.values())
        return {"trial": t, "lemma": "lemma 2.1", "block_ratios": {str(j): r for j, r in ratios.items()},
                "min_ratio": min(vals), "max_ratio": max(vals),
                "ratio": max(max(vals), 1.0 / min(vals))}
    if lemma == "3.1":
        r = composition_norm_ratio(g, fl["f"], ctx["shear"], bp.morrey, ws)
        return {"trial": t, "lemma": "lemma 3.1", "ratio": r, "volume_defect": ctx["volume_defect"]}
    if lemma == "3.3":
        rep = moser_report(g, fl["f"], fl["g"], bp, str(cfg.option("variant", "R-E7")), MoserSplit(), ws, t)
    elif lemma == "3.4":
        rep = lemma34_report(g, fl["v"], fl["theta"], bp, ws=ws, seed=t)
    elif lemma == "3.5":
        rep = lemma35_report(g, fl["v"], fl["theta"], bp, ws=ws, seed=t)
    else:
        rep = lemma_ratio(g, fl["f"], lemma, bp, ws, g=fl["g"], seed=t)
    return {"trial": t, **rep.to_dict()}


def run_verify(cfg: ExperimentConfig) -> tuple[int, dict]:
    lemma = str(cfg.option("lemma", ""))
    if lemma not in LEMMAS:
        raise ParameterError(f"unknown lemma id {lemma!r}; known ids: {', '.join(LEMMAS)}")
    if lemma == "3.3" and cfg.option("variant", "R-E7") not in MOSER_VARIANTS:
        raise ParameterError(f"unknown variant; known: {', '.join(MOSER_VARIANTS)}")
    ctx = _flow_context(cfg) if lemma == "3.1" and cfg.trials > 0 else {}
    rows = _ordered_map(lambda t: _verify_row(cfg, lemma, t, ctx), range(cfg.trials))
    ratios = [r["ratio"] for r in rows]
    summary = {"trials": len(rows), "max_ratio": max(ratios) if ratios else None,
               "min_ratio": min(ratios) if ratios else None}
    ok = all(_finite(x) and x >= 0 for x in ratios)
    if lemma == "3.1" and rows:
        tol = float(cfg.option("composition_tol", 0.02))
        summary.update(volume_defect=ctx["volume_defect"], flow_T=ctx["T"], flow_dt=ctx["dt"],
                       max_deviation=max(abs(x - 1) for x in ratios))
        ok = ok and ctx["volume_defect"] <= 1e-6 and summary["max_deviation"] <= tol
    return _finish(cfg, _envelope(cfg, lemma=lemma, rows=rows, summary=summary, passed=ok))


# -- solver runs -----------------------------------------------------------------


def _initial_field(cfg: ExperimentConfig, kind: str, path: str | None, stream: int) -> np.ndarray:
    g = cfg.grid
    amp = float(cfg.option("amplitude", 1.0))
    if kind == "taylor-green":
        return amp * cp.taylor_green(g)
    if kind == "random":
        return cp.random_solenoidal(g, cp.trial_rng(cfg.seed, 0, stream), cfg.modes,
                                    float(cfg.option("slope", 1.0)), amp)
    if kind == "zero":
        return np.zeros((g.dim,) + g.shape)
    if kind == "file":
        if not path:
            raise ParameterError("--init file needs --field PATH")
        fg, f = read_field(path)
        if fg != g:
            raise GridError(f"field at {path} lives on {fg.summary()}, run grid is {g.summary()}")
        return f
    raise ParameterError(f"unknown initial data kind {kind!r}")


def _write_csv(path: Path, cols: dict):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([repr(float(x)) for x in row])


def run_flow(cfg: ExperimentConfig) -> tuple[int, dict]:
    """``euler run`` / ``mhd run``: integrate, diagnose and write the run directory."""
    g = cfg.grid
    mhd = cfg.command == "mhd"
    scheme = cfg.option("scheme", "direct")
    if scheme not in ("direct", "iterate"):
        raise ParameterError(f"unknown scheme {scheme!r}; use direct or iterate")
    v0 = _initial_field(cfg, cfg.option("init", "taylor-green"), cfg.option("field"), 1)
    b0 = None
    if mhd:
        binit = cfg.option("binit", "zero")
        b0 = v0.copy() if binit == "equal" else _initial_field(cfg, binit, cfg.option("bfield"), 2)
    every = int(cfg.option("record_every", max(1, round(cfg.T / cfg.dt) // 20)))

    iteration = None
    if scheme == "direct":
        vs, bs = run_direct(g, FlowState(0.0, v0, b0), cfg.T, cfg.dt, record_every=every)
    else:
        if mhd:
            (vs, bs), rep = mhd_iterate(g, v0, b0, cfg.bm, cfg.T, cfg.dt, cfg.tol, cfg.max_iter, cfg.window)
        else:
            vs, rep = euler_iterate(g, v0, cfg.bm, cfg.T, cfg.dt, cfg.tol, cfg.max_iter, cfg.window)
            bs = None
        iteration = rep.to_dict()
        keep = list(range(0, len(vs), every))
        if keep[-1] != len(vs) - 1:
            keep.append(len(vs) - 1)
        vs = type(vs)(vs.times[keep], vs.fields[keep])
        if bs is not None:
            bs = type(bs)(bs.times[keep], bs.fields[keep])

    diag = blowup_diagnostics(g, vs, cfg.bm, bs, cfg.window)
    cols = diag.columns()
    div = max(divergence_defect(g, f) for f in vs.fields)
    if bs is not None:
        div = max(div, max(divergence_defect(g, f) for f in bs.fields))
    energy = [FlowState(t, v, None if bs is None else bs.fields[i]).energy(g) for i, (t, v) in
              enumerate(zip(vs.times, vs.fields))]
    sup_w = diag.sup_vorticity
    summary = {
        "scheme": scheme, "samples": len(vs),
        "max_divergence_defect": div,
        "energy_relative_drift": abs(energy[-1] - energy[0]) / energy[0] if energy[0] > 0 else 0.0,
        "sup_vorticity_initial": float(sup_w[0]),
        "sup_vorticity_relative_drift": float(np.max(np.abs(sup_w - sup_w[0])) / sup_w[0]) if sup_w[0] > 0 else 0.0,
        "bkm_integral_final": float(diag.bkm_integral[-1]),
        "besov_ordering_holds": bool(np.all(diag.b0_inf_inf <= diag.b0_inf_1 * (1 + 1e-12) + 1e-300)),
        "growth_exponent": diag.growth_exponent(),
    }
    finite = all(np.all(np.isfinite(c)) for c in cols.values())
    ok = finite and div <= 1e-10 and summary["besov_ordering_holds"]
    if iteration is not None:
        summary["converged"] = iteration["converged"]
        ok = ok and iteration["converged"]

    if cfg.out is not None:
        root = Path(cfg.out)
        files = []
        for i, t in enumerate(vs.times):
            files += [str(p.relative_to(root)) for p in write_field(root / "fields" / f"v_{i:04d}", g, vs.fields[i])]
            if bs is not None:
                files += [str(p.relative_to(root)) for p in
                          write_field(root / "fields" / f"b_{i:04d}", g, bs.fields[i])]
        _write_csv(root / "diagnostics.csv", cols)
        _write_json(root / "iteration_report.json",
                    {"config_hash": cfg.hash, "scheme": scheme, "report": iteration})
        _write_json(root / "manifest.json", {"config": cfg.to_dict(), "config_hash": cfg.hash,
                                             "snapshot_times": vs.times, "files": files})
    return _finish(cfg, _envelope(cfg, summary=summary, iteration=iteration, passed=ok))


# -- diagnose ----------------------------------------------------------------------


class RunDirectoryError(ValueError):
    """The run directory is incomplete or its reports disagree on the configuration."""


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    with path.open() as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    return {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(head)}


def diagnose(run_dir: str | Path) -> tuple[int, dict]:
    """Re-check a run directory without recomputing the run.

    Refuses directories whose manifest, report and iteration report do not
    carry the hash of the configuration recorded in the manifest.
    """
    root = Path(run_dir)
    try:
        manifest = json.loads((root / "manifest.json").read_text())
        report = json.loads((root / "report.json").read_text())
        iteration = json.loads((root / "iteration_report.json").read_text())
    except FileNotFoundError as exc:
        raise RunDirectoryError(f"incomplete run directory {root}: missing {Path(exc.filename).name}") from exc
    expected = config_hash(manifest["config"])
    found = {"manifest": manifest.get("config_hash"), "report": report.get("config_hash"),
             "iteration_report": iteration.get("config_hash")}
    bad = [k for k, h in found.items() if h != expected]
    if bad:
        raise RunDirectoryError(f"config hash mismatch in {root} ({', '.join(bad)}); refusing to diagnose")
    cols = _read_csv(root / "diagnostics.csv")
    t, w = cols["times"], cols["sup_vorticity"]
    body = {
        "config_hash": expected,
        "samples": len(t),
        "sup_vorticity_relative_drift": float(np.max(np.abs(w - w[0])) / w[0]) if w[0] > 0 else 0.0,
        "bkm_integral_final": float(cols["bkm_integral"][-1]),
        "bkm_vs_steady_estimate": float(cols["bkm_integral"][-1] / (t[-1] * w[0])) if t[-1] * w[0] > 0 else None,
        "bkm_nondecreasing": bool(np.all(np.diff(cols["bkm_integral"]) >= 0)),
        "besov_ordering_holds": bool(np.all(cols["b0_inf_inf"] <= cols["b0_inf_1"] * (1 + 1e-12))),
    }
    ok = body["bkm_nondecreasing"] and body["besov_ordering_holds"] and all(
        np.all(np.isfinite(c)) for c in cols.values())
    return (0 if ok else 2), {"command": "diagnose", **body, "passed": ok}


RUNNERS = {"norms": run_norms, "verify": run_verify, "euler": run_flow, "mhd": run_flow, "corpus": run_corpus}


def run_experiment(cfg: ExperimentConfig) -> tuple[int, dict]:
    if cfg.command == "diagnose":
        return diagnose(cfg.option("run_dir"))
    return RUNNERS[cfg.command](cfg)

"""Blow-up functionals along a solution: vorticity norms and the BKM integral."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid, curl, gradient
from .morrey import BMParams, WindowSet, besov_infinity_norm, besov_morrey_norm, sup_norm
from .series import TimeSeries


def _cumulative_trapezoid(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


@dataclass
class _Channel:
    sup: list[float] = field(default_factory=list)
    b0_inf_inf: list[float] = field(default_factory=list)
    b0_inf_1: list[float] = field(default_factory=list)
    besov_morrey: list[float] = field(default_factory=list)
    grad_sup: list[float] = field(default_factory=list)

    def add(self, grid: Grid, u: np.ndarray, bp: BMParams, ws: WindowSet):
        w = curl(grid, u)
        self.sup.append(sup_norm(grid, w))
        self.b0_inf_inf.append(besov_infinity_norm(grid, w, 0.0, math.inf, homogeneous=True))
        self.b0_inf_1.append(besov_infinity_norm(grid, w, 0.0, 1.0, homogeneous=True))
        self.besov_morrey.append(besov_morrey_norm(grid, u, bp, ws))
        self.grad_sup.append(sup_norm(grid, gradient(grid, u).reshape((-1,) + grid.shape)))


@dataclass
class DiagnosticsSeries:
    times: np.ndarray
    sup_vorticity: np.ndarray
    b0_inf_inf: np.ndarray
    b0_inf_1: np.ndarray
    bkm_integral: np.ndarray
    besov_morrey_v: np.ndarray
    grad_v_sup: np.ndarray
    # magnetic channel (current j = curl b); None for pure Euler
    sup_current: np.ndarray | None = None
    current_b0_inf_inf: np.ndarray | None = None
    current_b0_inf_1: np.ndarray | None = None
    current_bkm_integral: np.ndarray | None = None
    besov_morrey_b: np.ndarray | None = None

    def columns(self) -> dict[str, np.ndarray]:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    def to_csv(self, path: str | Path):
        cols = self.columns()
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(cols))
            for row in zip(*cols.values()):
                w.writerow([repr(float(x)) for x in row])

    def growth_exponent(self) -> float:
        """Smallest ``C`` with ``||v(t)||_{N^s} <= ||v(0)||_{N^s} exp(C int_0^t ||grad v||_inf)``."""
        base = self.besov_morrey_v[0]
        integ = _cumulative_trapezoid(self.times, self.grad_v_sup)
        best = 0.0
        for nrm, I in zip(self.besov_morrey_v[1:], integ[1:]):
            if base > 0 and I > 0 and nrm > base:
                best = max(best, math.log(nrm / base) / I)
        return best


def blowup_diagnostics(grid: Grid, series: TimeSeries, bp: BMParams = BMParams(), b_series: TimeSeries | None = None,
                       ws: WindowSet = WindowSet(), stride: int = 1) -> DiagnosticsSeries:
    """Evaluate every functional at each stored time (every ``stride``-th sample, plus the last).

    The BKM integral is a trapezoid rule over the evaluated samples.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    idx = list(range(0, len(series), stride))
    if idx[-1] != len(series) - 1:
        idx.append(len(series) - 1)
    times = series.times[idx]
    vc = _Channel()
    bc = _Channel() if b_series is not None else None
    for i in idx:
        vc.add(grid, series.fields[i], bp, ws)
        if bc is not None:
            bc.add(grid, b_series.fields[i], bp, ws)
    arr = np.asarray
    ds = DiagnosticsSeries(times, arr(vc.sup), arr(vc.b0_inf_inf), arr(vc.b0_inf_1),
                           _cumulative_trapezoid(times, arr(vc.sup)), arr(vc.besov_morrey), arr(vc.grad_sup))
    if bc is not None:
        ds.sup_current = arr(bc.sup)
        ds.current_b0_inf_inf = arr(bc.b0_inf_inf)
        ds.current_b0_inf_1 = arr(bc.b0_inf_1)
        ds.current_bkm_integral = _cumulative_trapezoid(times, arr(bc.sup))
        ds.besov_morrey_b = arr(bc.besov_morrey)
    return ds

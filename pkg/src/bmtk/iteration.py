"""Successive approximation for Euler and ideal MHD.

Starting from ``v^0 = 0`` each iterate solves a *linear* transport problem
driven by the previous one, with initial data ``S_{m+1} v0``. Iterates live
on a shared time grid; between steps the driver is evaluated by cubic
interpolation in time (:class:`bmtk.series.TimeSeries`). Differences are
measured in ``sup_t ||.||_{N^{s-1}}`` and successive ratios are reported,
so contraction is observed rather than assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, check_field, require_solenoidal
from .littlewood_paley import low_pass
from .morrey import BMParams, ParameterError, WindowSet, besov_morrey_norm
from .series import TimeSeries
from .solver import check_cfl, solve_linear_mhd, solve_linear_transport


@dataclass
class IterationReport:
    horizon: float
    dt: float
    tol: float
    norms: list[float] = field(default_factory=list)  # sup_t ||v^m||_{N^s}, m = 1, 2, ...
    differences: list[float] = field(default_factory=list)  # d_m = sup_t ||v^{m+1} - v^m||_{N^{s-1}}, m = 0, 1, ...
    converged: bool = False
    params: dict = field(default_factory=dict)

    @property
    def ratios(self) -> list[float | None]:
        """``d_m / d_{m-1}`` for ``m >= 1``; ``None`` where the previous difference is zero."""
        d = self.differences
        return [d[m] / d[m - 1] if d[m - 1] > 0 else None for m in range(1, len(d))]

    @property
    def iterations(self) -> int:
        return len(self.norms)

    def max_ratio(self, from_m: int = 2) -> float | None:
        vals = [r for m, r in enumerate(self.ratios, start=1) if m >= from_m and r is not None]
        return max(vals) if vals else None

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon, "dt": self.dt, "tol": self.tol, "converged": self.converged,
            "iterations": self.iterations, "norms": self.norms, "differences": self.differences,
            "ratios": self.ratios, "params": self.params,
        }


def _check_range(bp: BMParams, dim: int):
    if not bp.q > 1:
        raise ParameterError(f"the solvers need q > 1, got q={bp.q}")
    crit = 1 + dim / bp.p
    if not (bp.s > crit or (math.isclose(bp.s, crit) and bp.r == 1)):
        raise ParameterError(f"well-posedness range needs s > 1 + n/p (or s = 1 + n/p with r = 1); "
                             f"got s={bp.s}, n/p={dim / bp.p:.4g}, r={bp.r}")


def _sup_norm_in_time(grid: Grid, fields, bp: BMParams, ws: WindowSet) -> float:
    return max(besov_morrey_norm(grid, f, bp, ws) for f in fields)


def _iterate(grid, init, solve, bp, T, dt, tol, max_iter, ws, params):
    """Shared loop; ``init(m)`` gives the truncated data, ``solve(prev, data)`` the next iterate."""
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    weak = bp.replace(s=bp.s - 1)
    data0 = init(None)
    scale = sum(besov_morrey_norm(grid, f, weak, ws) for f in data0)
    report = IterationReport(T, dt, tol, params=params)
    threshold = tol * max(scale, 1e-300)
    prev = None
    for m in range(max_iter):
        cur = solve(prev, init(m + 1))
        report.norms.append(max(_sup_norm_in_time(grid, s.fields, bp, ws) for s in cur))
        diff = max(sum(besov_morrey_norm(grid, a if prev is None else a - prev[c].fields[k], weak, ws)
                       for c, a in enumerate(snap))
                   for k, snap in enumerate(zip(*(s.fields for s in cur))))
        report.differences.append(diff)
        prev = cur
        if diff <= threshold or scale == 0:
            report.converged = True
            break
    return prev, report


def euler_iterate(grid: Grid, v0: np.ndarray, bp: BMParams = BMParams(), T: float = 0.1, dt: float = 1e-3,
                  tol: float = 1e-8, max_iter: int = 12, ws: WindowSet = WindowSet()
                  ) -> tuple[TimeSeries, IterationReport]:
    """Iterate ``v^{m+1}_t + (v^m.grad) v^{m+1} + grad P^{m+1} = 0``, ``v^{m+1}(0) = S_{m+1} v0``.

    Stops once ``sup_t ||v^{m+1} - v^m||_{N^{s-1}}`` falls below
    ``tol * ||v0||_{N^{s-1}}``; returns the last iterate and the report. Not
    converging within ``max_iter`` is reported, not raised.
    """
    v0 = check_field(grid, v0, vector=True)
    require_solenoidal(grid, v0, name="v0")
    _check_range(bp, grid.dim)
    nsteps = max(1, int(round(T / dt)))
    zero = TimeSeries.steady(np.zeros_like(v0))

    def init(m):
        return [v0] if m is None else [low_pass(grid, v0, m)]

    def solve(prev, data):
        w = zero if prev is None else prev[0]
        check_cfl(grid, T / nsteps, *w.fields)
        return [solve_linear_transport(grid, w, data[0], T, dt, check=False)]

    params = {"bm": bp.to_dict(), "window": ws.to_dict(), "steps": nsteps, "system": "euler"}
    last, report = _iterate(grid, init, solve, bp, T, dt, tol, max_iter, ws, params)
    return last[0], report


def mhd_iterate(grid: Grid, v0: np.ndarray, b0: np.ndarray, bp: BMParams = BMParams(), T: float = 0.1,
                dt: float = 1e-3, tol: float = 1e-8, max_iter: int = 12, ws: WindowSet = WindowSet()
                ) -> tuple[tuple[TimeSeries, TimeSeries], IterationReport]:
    """Coupled iteration for ``(v, b)``; differences add the ``v`` and ``b`` parts."""
    v0 = check_field(grid, v0, vector=True)
    b0 = check_field(grid, b0, vector=True)
    require_solenoidal(grid, v0, name="v0")
    require_solenoidal(grid, b0, name="b0")
    _check_range(bp, grid.dim)
    nsteps = max(1, int(round(T / dt)))
    zero = TimeSeries.steady(np.zeros_like(v0))

    def init(m):
        return [v0, b0] if m is None else [low_pass(grid, v0, m), low_pass(grid, b0, m)]

    def solve(prev, data):
        w, a = (zero, zero) if prev is None else prev
        check_cfl(grid, T / nsteps, *w.fields, *a.fields)
        return list(solve_linear_mhd(grid, w, a, data[0], data[1], T, dt, check=False))

    params = {"bm": bp.to_dict(), "window": ws.to_dict(), "steps": nsteps, "system": "mhd"}
    last, report = _iterate(grid, init, solve, bp, T, dt, tol, max_iter, ws, params)
    return (last[0], last[1]), report

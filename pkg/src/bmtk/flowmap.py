"""Particle trajectories ``dX/dt = v(X, t)`` with their Jacobians.

Positions and deformation gradients ``J = dX/dalpha`` are advanced together
by classical RK4; ``dJ/dt = grad v(X) J`` is the variational equation.
Velocities and velocity gradients are evaluated off-grid with periodic
cubic B-splines (``scipy.ndimage``), or with exact Fourier sums for small
grids.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .grid import Grid, check_field, gradient, require_solenoidal, to_spectral
from .morrey import MorreyParams, WindowSet, morrey_norm
from .series import TimeSeries


@dataclass
class TrajectorySet:
    grid: Grid
    seeds: np.ndarray  # (nseeds, dim)
    times: np.ndarray  # (nt,)
    positions: np.ndarray  # (nt, nseeds, dim), wrapped into [0, L)
    jacobian_dets: np.ndarray | None = None  # (nt, nseeds)
    final_jacobians: np.ndarray | None = None  # (nseeds, dim, dim)

    @property
    def final_positions(self) -> np.ndarray:
        return self.positions[-1]

    def to_csv(self, path: str | Path):
        path = Path(path)
        dim = self.seeds.shape[1]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seed_id", "t"] + [f"x{i}" for i in range(dim)] + ["det"])
            for s in range(self.seeds.shape[0]):
                for it, t in enumerate(self.times):
                    det = "" if self.jacobian_dets is None else repr(float(self.jacobian_dets[it, s]))
                    w.writerow([s, repr(float(t))] + [repr(float(x)) for x in self.positions[it, s]] + [det])


class _Sampler:
    """Evaluates ``v`` and ``grad v`` of a driver at arbitrary points and times."""

    def __init__(self, grid: Grid, driver: TimeSeries, interpolation: str, jacobians: bool):
        if interpolation not in ("cubic", "spectral"):
            raise ValueError("interpolation must be 'cubic' or 'spectral'")
        self.grid, self.driver = grid, driver
        self.interpolation, self.jacobians = interpolation, jacobians
        self._cache: dict[int, np.ndarray] = {}

    def _prepared(self, i: int) -> np.ndarray:
        if i not in self._cache:
            v = self.driver.fields[i]
            parts = [v]
            if self.jacobians:
                parts.append(gradient(self.grid, v).reshape((-1,) + self.grid.shape))
            arrs = np.concatenate(parts)
            if self.interpolation == "cubic":
                arrs = np.stack([ndimage.spline_filter(a, order=3, mode="grid-wrap") for a in arrs])
            else:
                arrs = to_spectral(self.grid, arrs) / self.grid.size**self.grid.dim
            self._cache[i] = arrs
        return self._cache[i]

    def _eval(self, coeffs: np.ndarray, X: np.ndarray) -> np.ndarray:
        g = self.grid
        if self.interpolation == "cubic":
            idx = (X / g.spacing).T
            return np.stack([ndimage.map_coordinates(c, idx, order=3, mode="grid-wrap", prefilter=False)
                             for c in coeffs])
        k = g.wavenumbers.reshape(g.dim, -1)
        phase = np.exp(1j * (X @ k))
        return np.real(coeffs.reshape(len(coeffs), -1) @ phase.T)

    def __call__(self, X: np.ndarray, t: float):
        coeffs = sum(w * self._prepared(i) for i, w in self.driver.weights(t))
        vals = self._eval(coeffs, X)
        d = self.grid.dim
        vel = vals[:d].T
        grad = vals[d:].T.reshape(-1, d, d) if self.jacobians else None
        return vel, grad


def _as_series(grid: Grid, driver) -> TimeSeries:
    if isinstance(driver, TimeSeries):
        return driver
    arr = np.asarray(driver)
    if arr.shape == (grid.dim,) + grid.shape:
        return TimeSeries.steady(arr)
    raise ValueError("driver must be a TimeSeries or a single vector field")


def advect_trajectories(grid: Grid, driver, seeds: np.ndarray, dt: float, T: float | None = None,
                        jacobians: bool = True, interpolation: str = "cubic", record_every: int = 1,
                        check: bool = True) -> TrajectorySet:
    """Integrate trajectories from ``seeds`` over ``[0, T]`` with step ``dt``.

    ``driver`` is a steady vector field or a :class:`TimeSeries`. The
    horizon defaults to the last driver time.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    series = _as_series(grid, driver)
    if T is None:
        if series.is_steady:
            raise ValueError("a steady driver needs an explicit horizon T")
        T = series.end - series.times[0]
    t0 = float(series.times[0])
    if t0 + T > series.end * (1 + 1e-12) + 1e-12:
        raise ValueError(f"driver series ends at {series.end}, shorter than the requested horizon {t0 + T}")
    if check:
        for f in series.fields:
            require_solenoidal(grid, check_field(grid, f, vector=True), name="driver")
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    nsteps = max(1, int(round(T / dt)))
    h = T / nsteps
    sample = _Sampler(grid, series, interpolation, jacobians)
    L, d = grid.length, grid.dim

    X = seeds.copy()
    J = np.broadcast_to(np.eye(d), (len(seeds), d, d)).copy()
    times, positions, dets = [t0], [np.mod(X, L)], [np.ones(len(seeds))]
    for n in range(nsteps):
        t = t0 + n * h
        if jacobians:
            def rhs(Xs, Js, ts):
                vel, gv = sample(Xs, ts)
                return vel, gv @ Js
        else:
            def rhs(Xs, Js, ts):
                return sample(Xs, ts)[0], None
        k1x, k1j = rhs(X, J, t)
        k2x, k2j = rhs(X + 0.5 * h * k1x, None if not jacobians else J + 0.5 * h * k1j, t + 0.5 * h)
        k3x, k3j = rhs(X + 0.5 * h * k2x, None if not jacobians else J + 0.5 * h * k2j, t + 0.5 * h)
        k4x, k4j = rhs(X + h * k3x, None if not jacobians else J + h * k3j, t + h)
        X = X + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        if jacobians:
            J = J + (h / 6.0) * (k1j + 2 * k2j + 2 * k3j + k4j)
        if (n + 1) % record_every == 0 or n + 1 == nsteps:
            times.append(t0 + (n + 1) * h)
            positions.append(np.mod(X, L))
            dets.append(np.linalg.det(J) if jacobians else np.ones(len(seeds)))
    return TrajectorySet(grid, seeds, np.array(times), np.array(positions),
                         np.array(dets) if jacobians else None, J if jacobians else None)


def volume_check(ts: TrajectorySet) -> float:
    """``max |det grad X - 1|`` over seeds and recorded times."""
    if ts.jacobian_dets is None:
        raise ValueError("trajectory set carries no Jacobians")
    return float(np.max(np.abs(ts.jacobian_dets - 1.0)))


def grid_seeds(grid: Grid) -> np.ndarray:
    return grid.coordinates().reshape(grid.dim, -1).T


def compose(grid: Grid, f: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Sample ``f`` at ``points`` (one per grid node, row-major) by periodic cubic splines."""
    coeff = ndimage.spline_filter(f, order=3, mode="grid-wrap")
    vals = ndimage.map_coordinates(coeff, (points / grid.spacing).T, order=3, mode="grid-wrap", prefilter=False)
    return vals.reshape(grid.shape)


def composition_norm_ratio(grid: Grid, f: np.ndarray, ts: TrajectorySet, mp: MorreyParams = MorreyParams(),
                           ws: WindowSet = WindowSet()) -> float:
    """``||f o X_T||_{M^p_q} / ||f||_{M^p_q}`` for a flow seeded at every grid node."""
    f = check_field(grid, f, vector=False)
    if ts.seeds.shape != (grid.size**grid.dim, grid.dim) or not np.allclose(ts.seeds, grid_seeds(grid)):
        raise ValueError("composition needs trajectories seeded at every grid node (see grid_seeds)")
    base = morrey_norm(grid, f, mp, ws)
    if base == 0:
        raise ValueError("composition ratio is undefined for a field of zero norm")
    return morrey_norm(grid, compose(grid, f, ts.final_positions), mp, ws) / base

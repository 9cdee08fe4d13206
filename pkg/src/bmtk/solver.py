"""Pseudo-spectral time stepping for incompressible Euler and ideal MHD.

Every right-hand side is a Leray-projected, 2/3-dealiased transport term,

    dv/dt = -P[(w.grad) v - (a.grad) b],

which equals ``-(w.grad)v + (a.grad)b - grad P`` with the pressure fixed by
the Poisson problem in :func:`bmtk.grid.pressure_gradient`. Projecting in
Fourier space keeps the divergence at roundoff through every RK4 stage.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .grid import Grid, check_field, require_solenoidal
from .series import TimeSeries


class CFLError(RuntimeError):
    """Raised when ``|u|_max dt / h`` exceeds the stability bound."""


CFL_LIMIT = 0.5


def cfl_number(grid: Grid, dt: float, *fields: np.ndarray) -> float:
    speed = max((float(np.max(np.sqrt(np.sum(f**2, axis=0)))) for f in fields), default=0.0)
    return speed * dt / grid.spacing


def check_cfl(grid: Grid, dt: float, *fields: np.ndarray):
    c = cfl_number(grid, dt, *fields)
    if c > CFL_LIMIT:
        raise CFLError(f"CFL number {c:.3g} exceeds {CFL_LIMIT} (dt={dt}, h={grid.spacing:.4g}); reduce dt")


@dataclass
class FlowState:
    time: float
    v: np.ndarray
    b: np.ndarray | None = None

    @property
    def is_mhd(self) -> bool:
        return self.b is not None

    def validate(self, grid: Grid):
        require_solenoidal(grid, check_field(grid, self.v, vector=True), name="v")
        if self.b is not None:
            require_solenoidal(grid, check_field(grid, self.b, vector=True), name="b")

    def energy(self, grid: Grid) -> float:
        e = np.sum(self.v**2)
        if self.b is not None:
            e += np.sum(self.b**2)
        return float(e * grid.cell_volume)


class _RealKernel:
    """Half-spectrum transforms, derivatives and the dealiased Leray projector for one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        n, d = grid.size, grid.dim
        freqs = [np.fft.fftfreq(n, 1.0 / n)] * (d - 1) + [np.fft.rfftfreq(n, 1.0 / n)]
        k = np.stack(np.meshgrid(*freqs, indexing="ij"))
        kd = k * (2 * np.pi / grid.length)
        kd[np.abs(k) == n // 2] = 0.0
        self.ikd = 1j * kd
        mask = np.all(np.abs(k) <= n // 3, axis=0)
        k2 = np.sum(kd**2, axis=0)
        inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
        self.proj = mask * (np.eye(d).reshape((d, d) + (1,) * d) - kd[:, None] * kd[None, :] * inv)
        self.axes = grid.axes

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """``out[i, k] = d_k f_i``."""
        F = sfft.rfftn(f, axes=self.axes)
        return sfft.irfftn(F[:, None] * self.ikd[None], s=self.grid.shape, axes=self.axes)

    def project(self, f: np.ndarray) -> np.ndarray:
        F = sfft.rfftn(f, axes=self.axes)
        return sfft.irfftn(np.einsum("ij...,j...->i...", self.proj, F), s=self.grid.shape, axes=self.axes)


@lru_cache(maxsize=8)
def _kernel(grid: Grid) -> _RealKernel:
    return _RealKernel(grid)


def _dot(w: np.ndarray, J: np.ndarray) -> np.ndarray:
    return np.einsum("k...,ik...->i...", w, J)


def transport_rhs(grid: Grid, w: np.ndarray, v: np.ndarray, a: np.ndarray | None = None,
                  b: np.ndarray | None = None) -> np.ndarray:
    """``-P[(w.grad)v - (a.grad)b]`` with 2/3-dealiased products."""
    K = _kernel(grid)
    nonlinear = _dot(w, K.gradient(v))
    if a is not None:
        nonlinear -= _dot(a, K.gradient(b))
    return -K.project(nonlinear)


def _mhd_rhs(grid: Grid, w, a, v, b) -> list[np.ndarray]:
    K = _kernel(grid)
    Jv, Jb = K.gradient(v), K.gradient(b)
    return [-K.project(_dot(w, Jv) - _dot(a, Jb)), -K.project(_dot(w, Jb) - _dot(a, Jv))]


def elsasser(v: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return v + b, v - b


def elsasser_inverse(zplus: np.ndarray, zminus: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return 0.5 * (zplus + zminus), 0.5 * (zplus - zminus)


def _rk4(f, y, dt):
    k1 = f(y, 0.0)
    k2 = f([a + 0.5 * dt * k for a, k in zip(y, k1)], 0.5 * dt)
    k3 = f([a + 0.5 * dt * k for a, k in zip(y, k2)], 0.5 * dt)
    k4 = f([a + dt * k for a, k in zip(y, k3)], dt)
    return [a + (dt / 6.0) * (p + 2 * q + 2 * r + s) for a, p, q, r, s in zip(y, k1, k2, k3, k4)]


def direct_step(grid: Grid, state: FlowState, dt: float, check: bool = True) -> FlowState:
    """One RK4 step of the full nonlinear system (Euler, or ideal MHD when ``b`` is set)."""
    if check:
        check_cfl(grid, dt, *([state.v] if state.b is None else [state.v, state.b]))
    if state.b is None:
        (v,) = _rk4(lambda y, _: [transport_rhs(grid, y[0], y[0])], [state.v], dt)
        return FlowState(state.time + dt, v)

    v, b = _rk4(lambda y, _: _mhd_rhs(grid, y[0], y[1], y[0], y[1]), [state.v, state.b], dt)
    return FlowState(state.time + dt, v, b)


def run_direct(grid: Grid, state: FlowState, T: float, dt: float, record_every: int = 1,
               check: bool = True) -> tuple[TimeSeries, TimeSeries | None]:
    """Integrate over ``[t0, t0 + T]``; returns the ``v`` and (MHD) ``b`` series."""
    if not dt > 0 or not T > 0:
        raise ValueError("T and dt must be positive")
    if check:
        state.validate(grid)
    nsteps = max(1, int(round(T / dt)))
    h = T / nsteps
    t0 = state.time
    times, vs, bs = [t0], [state.v], [state.b]
    for n in range(nsteps):
        state = direct_step(grid, state, h, check=check)
        state.time = t0 + (n + 1) * h
        if (n + 1) % record_every == 0 or n + 1 == nsteps:
            times.append(state.time)
            vs.append(state.v)
            bs.append(state.b)
    vseries = TimeSeries(np.array(times), np.array(vs))
    bseries = None if state.b is None else TimeSeries(np.array(times), np.array(bs))
    return vseries, bseries


def _step_grid(T: float, dt: float) -> tuple[int, float]:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    nsteps = max(1, int(round(T / dt)))
    return nsteps, T / nsteps


def _driver(grid: Grid, w, t0: float) -> TimeSeries:
    if isinstance(w, TimeSeries):
        return w
    return TimeSeries.steady(check_field(grid, np.asarray(w), vector=True), t0)


def solve_linear_transport(grid: Grid, w, v0: np.ndarray, T: float, dt: float, t0: float = 0.0,
                           check: bool = True) -> TimeSeries:
    """Solve ``v_t + (w.grad)v + grad P = 0, div v = 0`` for a given driver ``w``.

    ``w`` is a steady field or a :class:`TimeSeries` covering ``[t0, t0+T]``;
    the result holds ``v`` at every step.
    """
    nsteps, h = _step_grid(T, dt)
    W = _driver(grid, w, t0)
    if W.end < t0 + T - 1e-12 * max(1.0, T):
        raise ValueError(f"driver ends at {W.end}, before the horizon {t0 + T}")
    v0 = check_field(grid, v0, vector=True)
    if check:
        require_solenoidal(grid, v0, name="v0")
        for f in W.fields:
            require_solenoidal(grid, f, name="w")
        check_cfl(grid, h, *W.fields)
    out = np.empty((nsteps + 1,) + v0.shape)
    out[0] = v0
    v = v0
    for n in range(nsteps):
        t = t0 + n * h
        (v,) = _rk4(lambda y, s: [transport_rhs(grid, W.at(t + s), y[0])], [v], h)
        out[n + 1] = v
    return TimeSeries(t0 + h * np.arange(nsteps + 1), out)


def solve_linear_mhd(grid: Grid, w, a, v0: np.ndarray, b0: np.ndarray, T: float, dt: float, t0: float = 0.0,
                     check: bool = True) -> tuple[TimeSeries, TimeSeries]:
    """Coupled linear system driven by ``(w, a)``::

        v_t + (w.grad)v - (a.grad)b + grad Pi = 0
        b_t + (w.grad)b - (a.grad)v            = 0

    The ``b`` right-hand side is projected too; it is divergence-free
    already when ``(w, a) = (v, b)``, so the fixed point is unchanged.
    """
    nsteps, h = _step_grid(T, dt)
    W, A = _driver(grid, w, t0), _driver(grid, a, t0)
    if min(W.end, A.end) < t0 + T - 1e-12 * max(1.0, T):
        raise ValueError(f"driver ends before the horizon {t0 + T}")
    v0 = check_field(grid, v0, vector=True)
    b0 = check_field(grid, b0, vector=True)
    if check:
        require_solenoidal(grid, v0, name="v0")
        require_solenoidal(grid, b0, name="b0")
        for f in list(W.fields) + list(A.fields):
            require_solenoidal(grid, f, name="driver")
        check_cfl(grid, h, *W.fields, *A.fields)
    vs = np.empty((nsteps + 1,) + v0.shape)
    bs = np.empty_like(vs)
    vs[0], bs[0] = v0, b0
    y = [v0, b0]
    for n in range(nsteps):
        t = t0 + n * h

        y = _rk4(lambda yy, s: _mhd_rhs(grid, W.at(t + s), A.at(t + s), yy[0], yy[1]), y, h)
        vs[n + 1], bs[n + 1] = y
    times = t0 + h * np.arange(nsteps + 1)
    return TimeSeries(times, vs), TimeSeries(times, bs)

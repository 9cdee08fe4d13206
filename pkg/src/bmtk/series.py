"""Time series of fields with cubic-in-time evaluation between samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TimeSeries:
    """Snapshots ``fields[i]`` at increasing ``times[i]``.

    A single snapshot is treated as a steady (autonomous) field. Between
    samples the series is evaluated with 4-point Lagrange interpolation,
    which keeps RK4 stage values fourth-order accurate.
    """

    times: np.ndarray
    fields: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.fields = np.asarray(self.fields)
        if self.times.ndim != 1 or len(self.times) != len(self.fields) or len(self.times) == 0:
            raise ValueError("times and fields must be non-empty and of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @classmethod
    def steady(cls, field: np.ndarray, t0: float = 0.0) -> "TimeSeries":
        return cls(np.array([t0]), np.asarray(field)[None])

    @property
    def is_steady(self) -> bool:
        return len(self.times) == 1

    @property
    def end(self) -> float:
        return float("inf") if self.is_steady else float(self.times[-1])

    def __len__(self):
        return len(self.times)

    def weights(self, t: float) -> list[tuple[int, float]]:
        """Interpolation stencil ``[(index, weight), ...]`` for time ``t``."""
        if self.is_steady:
            return [(0, 1.0)]
        ts = self.times
        tol = 1e-12 * max(1.0, abs(ts[-1]))
        if t < ts[0] - tol or t > ts[-1] + tol:
            raise ValueError(f"time {t} outside the series range [{ts[0]}, {ts[-1]}]")
        i = int(np.searchsorted(ts, t))
        if i < len(ts) and abs(ts[i] - t) <= tol:
            return [(i, 1.0)]
        if i > 0 and abs(ts[i - 1] - t) <= tol:
            return [(i - 1, 1.0)]
        npts = min(4, len(ts))
        lo = min(max(i - 2, 0), len(ts) - npts)
        idx = list(range(lo, lo + npts))
        out = []
        for a in idx:
            w = 1.0
            for b in idx:
                if b != a:
                    w *= (t - ts[b]) / (ts[a] - ts[b])
            out.append((a, w))
        return out

    def at(self, t: float) -> np.ndarray:
        st = self.weights(t)
        if len(st) == 1:
            return self.fields[st[0][0]]
        return sum(w * self.fields[i] for i, w in st)

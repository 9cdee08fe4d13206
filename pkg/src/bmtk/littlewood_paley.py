"""Littlewood-Paley blocks on the torus.

The cutoff ``chi`` is 1 on ``[0, 1]``, 0 on ``[2, inf)`` and joins the
two plateaus with the smooth step ``B(2-t) / (B(2-t) + B(t-1))`` where
``B(x) = exp(-1/x)`` for ``x > 0``. Band filters are

    phi_j(xi) = chi(2^-j |xi|) - chi(2^(1-j) |xi|),

supported in ``2^(j-1) <= |xi| <= 2^(j+1)``, and the low pass is
``S_j = chi(2^-j |xi|)``. Homogeneous blocks treat the zero mode (the
only periodic polynomial) separately as the mean. The inhomogeneous
low block is ``Delta_{-1} = S_{-1}``, so that ``S_j = sum_{i<=j} Delta_i``
and the blocks sum to the identity.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid, to_physical, to_spectral


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def cutoff_chi(t):
    """Smooth radial cutoff; accepts scalars or arrays of nonnegative values."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("cutoff_chi is defined for t >= 0")
    out = np.where(arr <= 1.0, 1.0, 0.0)
    mid = (arr > 1.0) & (arr < 2.0)
    if np.any(mid):
        tm = arr[mid]
        a, b = _bump(2.0 - tm), _bump(tm - 1.0)
        out[mid] = a / (a + b)
    return float(out) if np.ndim(t) == 0 else out


class CutoffProfile:
    """Caches ``chi(2^-j |xi|)`` on a grid's frequency lattice."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self._cache: dict[int, np.ndarray] = {}

    def low(self, j: int) -> np.ndarray:
        """Multiplier of ``S_j``."""
        if j not in self._cache:
            self._cache[j] = cutoff_chi(self.grid.radius * 2.0**-j)
        return self._cache[j]

    def band(self, j: int) -> np.ndarray:
        """Multiplier ``phi_j`` of the homogeneous block."""
        return self.low(j) - self.low(j - 1)


_PROFILES: dict[Grid, CutoffProfile] = {}


def profile(grid: Grid) -> CutoffProfile:
    if grid not in _PROFILES:
        _PROFILES[grid] = CutoffProfile(grid)
    return _PROFILES[grid]


def block_range(grid: Grid, homogeneous: bool = True) -> tuple[int, int]:
    """Inclusive ``(j_min, j_max)`` of the blocks that can be nonzero on ``grid``.

    Outside this range every block is identically zero (asserted in tests).
    """
    r = grid.radius
    rmin = float(np.min(r[r > 0]))
    rmax = float(np.max(r))
    # phi_j vanishes unless 2^(j-1) < |xi| < 2^(j+1) for some lattice |xi|.
    j_max = math.ceil(math.log2(rmax))
    if homogeneous:
        j_min = math.floor(math.log2(rmin))
    else:
        j_min = -1
    return j_min, max(j_max, j_min)


def dyadic_block_multiplier(grid: Grid, j: int, homogeneous: bool = True) -> np.ndarray:
    prof = profile(grid)
    if homogeneous:
        return prof.band(j)
    if j <= -2:
        return np.zeros(grid.shape)
    if j == -1:
        return prof.low(-1)
    return prof.band(j)


def dyadic_block(grid: Grid, f: np.ndarray, j: int, homogeneous: bool = True) -> np.ndarray:
    """``Delta_j f`` (inhomogeneous) or the homogeneous block of ``f``."""
    F = to_spectral(grid, f)
    return to_physical(grid, F * dyadic_block_multiplier(grid, j, homogeneous))


def low_pass(grid: Grid, f: np.ndarray, j: int) -> np.ndarray:
    """``S_j f``: keeps ``|xi| <= 2^j``, removes ``|xi| >= 2^(j+1)``."""
    return to_physical(grid, to_spectral(grid, f) * profile(grid).low(j))


@dataclass
class DyadicDecomposition:
    grid: Grid
    j_min: int
    j_max: int
    blocks: list[np.ndarray]
    mean: np.ndarray | float = 0.0
    homogeneous: bool = True
    kind: str = "scalar"

    def __post_init__(self):
        if len(self.blocks) != self.j_max - self.j_min + 1:
            raise ValueError("block count does not match the index range")

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def block(self, j: int) -> np.ndarray:
        if j < self.j_min or j > self.j_max:
            return np.zeros_like(self.blocks[0])
        return self.blocks[j - self.j_min]

    def items(self):
        return zip(self.indices, self.blocks)

    # serialization: JSON manifest + one field file per block
    def save(self, directory: str | Path, stem: str = "block") -> Path:
        from .fieldio import write_field

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files = []
        for j, b in self.items():
            name = f"{stem}_{j:+d}"
            write_field(directory / name, self.grid, b, kind=self.kind)
            files.append({"j": j, "field": name})
        manifest = {
            "grid": self.grid.summary(),
            "j_min": self.j_min,
            "j_max": self.j_max,
            "homogeneous": self.homogeneous,
            "mean": np.asarray(self.mean, dtype=float).tolist(),
            "kind": self.kind,
            "blocks": files,
        }
        path = directory / f"{stem}_manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
        return path

    @classmethod
    def load(cls, manifest_path: str | Path) -> "DyadicDecomposition":
        from .fieldio import read_field

        manifest_path = Path(manifest_path)
        m = json.loads(manifest_path.read_text())
        grid = Grid(**m["grid"])
        blocks = [read_field(manifest_path.parent / e["field"])[1] for e in m["blocks"]]
        mean = m["mean"]
        mean = np.asarray(mean) if isinstance(mean, list) else float(mean)
        return cls(grid, m["j_min"], m["j_max"], blocks, mean, m["homogeneous"], m["kind"])


def _mean(grid: Grid, f: np.ndarray):
    return np.mean(f, axis=grid.axes) if f.ndim > grid.dim else float(np.mean(f))


def decompose(grid: Grid, f: np.ndarray, homogeneous: bool = True) -> DyadicDecomposition:
    """Split ``f`` into all blocks that can be nonzero on the grid.

    Homogeneous: mean stored separately, blocks ``j_min..j_max`` all have
    zero mean. Inhomogeneous: blocks ``-1..j_max``, mean lives in block -1.
    """
    F = to_spectral(grid, f)
    j_min, j_max = block_range(grid, homogeneous)
    if homogeneous:
        zero = (slice(None),) * (f.ndim - grid.dim) + (0,) * grid.dim
        mean = np.real(F[zero]) / grid.size**grid.dim
        F = F.copy()
        F[zero] = 0.0
        mean = float(mean) if np.ndim(mean) == 0 else np.asarray(mean)
    else:
        mean = 0.0
    blocks = [
        to_physical(grid, F * dyadic_block_multiplier(grid, j, homogeneous))
        for j in range(j_min, j_max + 1)
    ]
    kind = "scalar" if f.ndim == grid.dim else "vector"
    return DyadicDecomposition(grid, j_min, j_max, blocks, mean, homogeneous, kind)


def reconstruct(d: DyadicDecomposition) -> np.ndarray:
    total = np.sum(d.blocks, axis=0)
    if d.homogeneous:
        mean = np.asarray(d.mean, dtype=float)
        total = total + mean.reshape(mean.shape + (1,) * d.grid.dim)
    return total

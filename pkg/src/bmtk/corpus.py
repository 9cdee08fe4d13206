"""Deterministic test fields for the estimate harnesses and solvers.

Random fields are drawn on a fixed integer-wavevector box ``|k_i| <= kmax``
that does not depend on the grid, so one seed yields the same function on
every grid with ``size // 3 >= kmax``. Per-trial generators are derived by
counter-mode splitting of the master seed, which keeps results independent
of the order in which trials run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridError, dealias, leray_project, to_physical


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial), int(stream)]))


def _box_modes(dim: int, kmax: int) -> np.ndarray:
    r = np.arange(-kmax, kmax + 1)
    return np.stack(np.meshgrid(*([r] * dim), indexing="ij"))


def random_coefficients(dim: int, rng: np.random.Generator, kmax: int = 16, slope: float = 1.0,
                        amplitude: float = 1.0, components: int | None = None) -> np.ndarray:
    """Hermitian Fourier coefficients on the box, zero mean.

    Modes with ``2^(j-1) < |k| <= 2^j`` form shell ``j``; each shell is
    rescaled to coefficient energy ``(amplitude 2^(-slope j))^2``.
    """
    shape = (2 * kmax + 1,) * dim
    lead = () if components is None else (components,)
    C = rng.standard_normal(lead + shape) + 1j * rng.standard_normal(lead + shape)
    C = 0.5 * (C + np.conj(np.flip(C, axis=tuple(range(-dim, 0)))))
    k = _box_modes(dim, kmax)
    rad = np.sqrt(np.sum(k**2, axis=0))
    C[(..., ) + (kmax,) * dim] = 0.0
    for j in range(0, math.ceil(math.log2(max(rad.max(), 1))) + 1):
        shell = (rad > 2.0 ** (j - 1)) & (rad <= 2.0**j) if j > 0 else (rad > 0) & (rad <= 1)
        if not np.any(shell):
            continue
        energy = np.sum(np.abs(C[..., shell]) ** 2)
        if energy > 0:
            C[..., shell] *= amplitude * 2.0 ** (-slope * j) / math.sqrt(energy)
    return C


def synthesize(grid: Grid, C: np.ndarray) -> np.ndarray:
    """Place box coefficients (``f = sum c_k e^{i k.x 2pi/L}``) on the grid and transform."""
    dim = grid.dim
    kmax = (C.shape[-1] - 1) // 2
    if kmax > grid.size // 3:
        raise GridError(f"box |k| <= {kmax} does not fit under the 2/3 cutoff of size {grid.size}")
    lead = C.shape[:-dim]
    F = np.zeros(lead + grid.shape, dtype=complex)
    idx = np.arange(-kmax, kmax + 1) % grid.size
    F[(...,) + np.ix_(*([idx] * dim))] = C * grid.size**dim
    return to_physical(grid, F)


def random_field(grid: Grid, rng: np.random.Generator, kmax: int = 16, slope: float = 1.0,
                 amplitude: float = 1.0) -> np.ndarray:
    return synthesize(grid, random_coefficients(grid.dim, rng, kmax, slope, amplitude))


def random_solenoidal(grid: Grid, rng: np.random.Generator, kmax: int = 16, slope: float = 1.0,
                      amplitude: float = 1.0) -> np.ndarray:
    raw = synthesize(grid, random_coefficients(grid.dim, rng, kmax, slope, amplitude, components=grid.dim))
    return leray_project(grid, raw)


def single_mode(grid: Grid, k, amplitude: float = 1.0, phase: float = 0.0) -> np.ndarray:
    x = grid.coordinates()
    arg = sum(2 * math.pi / grid.length * ki * xi for ki, xi in zip(k, x))
    return amplitude * np.cos(arg + phase)


def taylor_green(grid: Grid, amplitude: float = 1.0) -> np.ndarray:
    """Perpendicular gradient of ``cos x cos y`` (2D); the classic TG cell in 3D."""
    x = grid.coordinates() * (2 * math.pi / grid.length)
    if grid.dim == 2:
        return amplitude * np.stack([np.cos(x[0]) * np.sin(x[1]), -np.sin(x[0]) * np.cos(x[1])])
    c = np.cos
    s = np.sin
    return amplitude * np.stack([s(x[0]) * c(x[1]) * c(x[2]), -c(x[0]) * s(x[1]) * c(x[2]), np.zeros(grid.shape)])


def shear_flow(grid: Grid, amplitude: float = 1.0) -> np.ndarray:
    """``v = (sin y, 0[, 0])``."""
    x = grid.coordinates() * (2 * math.pi / grid.length)
    out = np.zeros((grid.dim,) + grid.shape)
    out[0] = amplitude * np.sin(x[1])
    return out


def periodic_bump(grid: Grid, center, width: float) -> np.ndarray:
    """Smooth periodic bump ``exp((sum cos(x_i - c_i) - dim) / width^2)``."""
    x = grid.coordinates() * (2 * math.pi / grid.length)
    expo = sum(np.cos(xi - ci) - 1.0 for xi, ci in zip(x, center))
    return np.exp(expo / width**2)


@dataclass
class CorpusEntry:
    label: str
    field: np.ndarray
    meta: dict = field(default_factory=dict)


@dataclass
class Corpus:
    grid: Grid
    entries: list[CorpusEntry]
    manifest: dict

    def __len__(self):
        return len(self.entries)

    def by_prefix(self, prefix: str) -> list[CorpusEntry]:
        return [e for e in self.entries if e.label.startswith(prefix)]


def build_corpus(grid: Grid, seed: int, trials: int, kmax: int = 16, slope: float = 1.0) -> Corpus:
    """Random scalars, random solenoidal pairs and the structured families.

    Every field is dealiased. ``trials = 0`` gives an empty corpus.
    """
    manifest = {"grid": grid.summary(), "seed": int(seed), "trials": int(trials), "kmax": kmax, "slope": slope,
                "entries": []}
    entries: list[CorpusEntry] = []

    def add(label, f, **meta):
        entries.append(CorpusEntry(label, dealias(grid, f), meta))
        manifest["entries"].append({"label": label, **meta})

    for t in range(trials):
        add(f"scalar/{t}", random_field(grid, trial_rng(seed, t, 0), kmax, slope), trial=t, stream=0)
        add(f"velocity/{t}", random_solenoidal(grid, trial_rng(seed, t, 1), kmax, slope), trial=t, stream=1)
    if trials > 0:
        for k in (1, 4, 16):
            if k <= grid.size // 3:
                add(f"mode/{k}", single_mode(grid, (k,) + (0,) * (grid.dim - 1)), k=k)
        add("taylor-green", taylor_green(grid))
        add("shear", shear_flow(grid))
        c1, c2 = (1.0,) * grid.dim, (4.0,) * grid.dim
        add("bump-product", periodic_bump(grid, c1, 0.6) * periodic_bump(grid, c2, 0.9))
    return Corpus(grid, entries, manifest)


def corpus_from_manifest(manifest: dict) -> Corpus:
    return build_corpus(Grid(**manifest["grid"]), manifest["seed"], manifest["trials"], manifest["kmax"],
                        manifest["slope"])


def shell_norms(grid: Grid, f: np.ndarray) -> dict[int, float]:
    """L^2 norms of the homogeneous blocks, used to measure spectral slope."""
    from .littlewood_paley import decompose

    return {j: float(np.sqrt(grid.cell_volume * np.sum(b**2))) for j, b in decompose(grid, f).items()}


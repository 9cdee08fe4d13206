"""Experiment configuration shared by the CLI and the programmatic runners."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .grid import Grid
from .morrey import BMParams, MorreyParams, WindowSet
from .reports import config_hash

COMMANDS = ("norms", "verify", "euler", "mhd", "diagnose", "corpus")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    grid: Grid = Grid(2, 64)
    bm: BMParams = BMParams()
    window: WindowSet = WindowSet()
    seed: int = 0
    trials: int = 4
    T: float = 1.0
    dt: float = 1e-3
    tol: float = 1e-8
    max_iter: int = 12
    out: Path | None = None
    # command-specific knobs (lemma id, init kinds, corpus box, ...), JSON-friendly values only
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}; known: {', '.join(COMMANDS)}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")

    def option(self, name: str, default=None):
        return self.options.get(name, default)

    def with_options(self, **kw) -> "ExperimentConfig":
        return replace(self, options={**self.options, **kw})

    @property
    def modes(self) -> int:
        """Spectral box of random corpus fields, clipped to the dealiased band."""
        return min(int(self.option("modes", 16)), self.grid.size // 3)

    def to_dict(self) -> dict:
        """Everything that determines results; the output path is excluded."""
        return {
            "command": self.command,
            "grid": self.grid.summary(),
            "bm": self.bm.to_dict(),
            "window": self.window.to_dict(),
            "seed": self.seed,
            "trials": self.trials,
            "T": self.T,
            "dt": self.dt,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "options": dict(sorted(self.options.items())),
        }

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict, out: Path | None = None) -> "ExperimentConfig":
        bm = d["bm"]
        return cls(
            command=d["command"], grid=Grid(**d["grid"]),
            bm=BMParams(bm["s"], MorreyParams(_num(bm["p"]), _num(bm["q"])), _num(bm["r"]), bm["homogeneous"]),
            window=WindowSet(**d["window"]), seed=d["seed"], trials=d["trials"], T=d["T"], dt=d["dt"],
            tol=d["tol"], max_iter=d["max_iter"], out=out, options=d.get("options", {}),
        )


def _num(x):
    return math.inf if x in ("inf", "Infinity") else float(x)


def worker_count() -> int:
    """Worker cap from ``BMTK_THREADS`` (default: CPU count)."""
    raw = os.environ.get("BMTK_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"BMTK_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"BMTK_THREADS must be a positive integer, got {raw!r}")
    return n

"""Report records shared by the estimate harnesses and the solvers."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Any

import numpy as np


class EstimateError(ValueError):
    """An estimate has a vanishing right-hand side but a nonzero left-hand side."""


def jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays, dataclasses and non-finite floats for JSON."""
    if is_dataclass(obj) and not isinstance(obj, type):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, fixed separators, repr-exact floats."""
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def config_hash(config: dict) -> str:
    payload = json.dumps(jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def ratio(lhs: float, rhs_total: float) -> float:
    if rhs_total > 0:
        return lhs / rhs_total
    if lhs == 0:
        return 0.0
    raise EstimateError(f"right-hand side vanishes but left-hand side is {lhs:.3e}")


@dataclass
class EstimateReport:
    """One evaluation of an inequality: LHS, named RHS terms, and their ratio."""

    lemma: str
    lhs: float
    rhs_terms: list[tuple[str, float]]
    params: dict = field(default_factory=dict)
    seed: int | None = None
    grid: dict | None = None

    def __post_init__(self):
        if not (self.lhs >= 0):
            raise EstimateError(f"left-hand side must be nonnegative, got {self.lhs}")
        self.rhs_terms = [(str(n), float(v)) for n, v in self.rhs_terms]

    @property
    def rhs(self) -> float:
        return float(sum(v for _, v in self.rhs_terms))

    @property
    def empirical_constant(self) -> float:
        return ratio(self.lhs, self.rhs)

    @property
    def ratio(self) -> float:
        return self.empirical_constant

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "lhs": self.lhs,
            "rhs_terms": [{"name": n, "value": v} for n, v in self.rhs_terms],
            "ratio": self.ratio,
            "empirical_constant": self.empirical_constant,
            "params": jsonable(self.params),
            "grid": self.grid,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateReport":
        terms = [(t["name"], t["value"]) for t in d["rhs_terms"]]
        return cls(d["lemma"], d["lhs"], terms, d.get("params", {}), d.get("seed"), d.get("grid"))

"""Field files: a JSON header next to a raw little-endian float64 payload.

``name.json`` holds ``{dim, size, length, kind, dtype, order}`` and
``name.bin`` holds ``size**dim`` samples in row-major order. Vector
fields are written as one file pair per component, ``name.0``, ``name.1``...
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Grid, GridError, check_field

KINDS = ("scalar", "component-of-vector")


def _pair(path: str | Path) -> tuple[Path, Path]:
    path = Path(path)
    if path.suffix in (".json", ".bin"):
        path = path.with_suffix("")
    return path.with_name(path.name + ".json"), path.with_name(path.name + ".bin")


def write_field(path: str | Path, grid: Grid, f: np.ndarray, kind: str = "scalar") -> list[Path]:
    """Write a scalar field, or each component of a vector field."""
    f = check_field(grid, f)
    if f.ndim == grid.dim + 1:
        out = []
        for i, comp in enumerate(f):
            out += write_field(Path(f"{path}.{i}"), grid, comp, kind="component-of-vector")
        return out
    if kind not in KINDS:
        kind = "scalar"
    header_path, data_path = _pair(path)
    header_path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "dim": grid.dim,
        "size": grid.size,
        "length": grid.length,
        "kind": kind,
        "dtype": "f64le",
        "order": "row-major",
    }
    header_path.write_text(json.dumps(header, sort_keys=True))
    data_path.write_bytes(np.ascontiguousarray(f, dtype="<f8").tobytes())
    return [header_path, data_path]


def read_field(path: str | Path) -> tuple[Grid, np.ndarray]:
    header_path, data_path = _pair(path)
    if not header_path.exists():
        # Vector fields were split into numbered components.
        comps = []
        i = 0
        while _pair(Path(f"{path}.{i}"))[0].exists():
            comps.append(read_field(Path(f"{path}.{i}")))
            i += 1
        if not comps:
            raise FileNotFoundError(f"no field header at {header_path}")
        return comps[0][0], np.stack([c[1] for c in comps])
    header = json.loads(header_path.read_text())
    if header.get("dtype") != "f64le" or header.get("order") != "row-major":
        raise GridError(f"unsupported field encoding in {header_path}")
    grid = Grid(header["dim"], header["size"], header["length"])
    raw = np.frombuffer(data_path.read_bytes(), dtype="<f8")
    if raw.size != grid.size**grid.dim:
        raise GridError(f"{data_path}: expected {grid.size ** grid.dim} samples, found {raw.size}")
    return grid, raw.reshape(grid.shape).astype(float)

"""Morrey norms, Besov-Morrey norms and the embedding/log-inequality evaluators.

The Morrey sup over balls is realised with periodic axis-aligned cubes of
half-width ``r = L 2^-k`` (``k = 1..k_max``) centred on grid points. For a
cube of ``m = 2r/h`` samples the window sums of ``|f|^q`` come from a
wrapped integral image, one cumulative sum per axis, so each radius costs
``O(N^dim)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, check_field, gradient
from .littlewood_paley import DyadicDecomposition, decompose
from .reports import EstimateReport

INF = math.inf


class ParameterError(ValueError):
    """Norm or lemma parameters outside their admissible range."""


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


@dataclass(frozen=True)
class MorreyParams:
    p: float = 4.0
    q: float = 2.0

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if math.isnan(p) or math.isnan(q) or not (1.0 <= q <= p):
            raise ParameterError(
                f"Morrey parameters need 1 <= q <= p <= inf (Morrey space definition); got p={self.p}, q={self.q}"
            )

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q}


@dataclass(frozen=True)
class BMParams:
    s: float = 2.5
    morrey: MorreyParams = field(default_factory=MorreyParams)
    r: float = 2.0
    homogeneous: bool = False

    def __post_init__(self):
        if math.isnan(self.r) or self.r < 1:
            raise ParameterError(f"r must lie in [1, inf], got {self.r}")

    @property
    def p(self) -> float:
        return self.morrey.p

    @property
    def q(self) -> float:
        return self.morrey.q

    def replace(self, **kw) -> "BMParams":
        s = kw.pop("s", self.s)
        r = kw.pop("r", self.r)
        hom = kw.pop("homogeneous", self.homogeneous)
        p = kw.pop("p", self.p)
        q = kw.pop("q", self.q)
        if kw:
            raise TypeError(f"unknown fields {sorted(kw)}")
        return BMParams(s, MorreyParams(p, q), r, hom)

    def is_algebra(self, dim: int) -> bool:
        """Range in which the space is a Banach algebra."""
        crit = dim * _inv(self.p)
        return self.s > crit or (self.s == crit and self.r == 1)

    def to_dict(self) -> dict:
        return {"s": self.s, "p": self.p, "q": self.q, "r": self.r, "homogeneous": self.homogeneous}


@dataclass(frozen=True)
class WindowSet:
    """Dyadic half-widths ``L 2^-k, k = 1..k_max`` and the centre stride."""

    k_max: int | None = None
    stride: int = 1

    def resolve(self, grid: Grid) -> tuple[list[float], list[int], int]:
        k_max = self.k_max if self.k_max is not None else int(math.log2(grid.size))
        if not 1 <= k_max <= int(math.log2(grid.size)):
            raise ParameterError(f"k_max must lie in [1, log2(size)], got {k_max}")
        if self.stride < 1 or grid.size % self.stride:
            raise ParameterError(f"stride {self.stride} must divide the grid size {grid.size}")
        radii = [grid.length * 2.0**-k for k in range(1, k_max + 1)]
        widths = [grid.size >> (k - 1) for k in range(1, k_max + 1)]
        return radii, widths, self.stride

    def to_dict(self) -> dict:
        return {"k_max": self.k_max, "stride": self.stride}


def magnitude(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Pointwise ``|f|``; Euclidean norm over leading component axes."""
    f = check_field(grid, f)
    if f.ndim == grid.dim:
        return np.abs(f)
    lead = tuple(range(f.ndim - grid.dim))
    return np.sqrt(np.sum(f**2, axis=lead))


def window_sums(a: np.ndarray, width: int, stride: int = 1) -> np.ndarray:
    """Sums of ``a`` over every periodic cube of ``width`` samples per side.

    Entry ``idx`` is the cube whose first corner is ``idx * stride - width//2``,
    i.e. the cube centred (to the half-sample) at grid point ``idx * stride``.
    """
    n = a.shape[0]
    out = a
    for ax in range(a.ndim):
        if width >= n:
            total = np.sum(out, axis=ax, keepdims=True)
            shape = list(out.shape)
            shape[ax] = n // stride
            out = np.broadcast_to(total, shape)
            continue
        # integral image along this axis, with one wrap layer of `width` samples
        lo = -(width // 2)
        ext = np.take(out, np.arange(lo, n + lo + width) % n, axis=ax)
        cs = np.cumsum(ext, axis=ax)
        cs = np.concatenate([np.zeros_like(np.take(cs, [0], axis=ax)), cs], axis=ax)
        starts = np.arange(0, n, stride)
        out = np.take(cs, starts + width, axis=ax) - np.take(cs, starts, axis=ax)
    return np.asarray(out)


def morrey_norm(grid: Grid, f: np.ndarray, mp: MorreyParams = MorreyParams(), ws: WindowSet = WindowSet()) -> float:
    """Discrete ``M^p_q`` norm: max over windows of ``r^(n/p-n/q) (h^n sum |f|^q)^(1/q)``."""
    a = magnitude(grid, f)
    p, q = float(mp.p), float(mp.q)
    if math.isinf(q):
        return float(np.max(a))
    radii, widths, stride = ws.resolve(grid)
    aq = a**q
    n = grid.dim
    best = 0.0
    for r, m in zip(radii, widths):
        top = float(np.max(window_sums(aq, m, stride)))
        val = r ** (n * _inv(p) - n / q) * (grid.cell_volume * top) ** (1.0 / q)
        best = max(best, val)
    return best


def lp_norm(grid: Grid, f: np.ndarray, p: float) -> float:
    a = magnitude(grid, f)
    if math.isinf(p):
        return float(np.max(a))
    return float((grid.cell_volume * np.sum(a**p)) ** (1.0 / p))


def sup_norm(grid: Grid, f: np.ndarray) -> float:
    return float(np.max(magnitude(grid, f)))


# -- sequence norms over blocks ----------------------------------------------


def lr_aggregate(values, r: float) -> float:
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        return 0.0
    if math.isinf(r):
        return float(np.max(values))
    return float(np.sum(values**r) ** (1.0 / r))


def _blocks(grid, f, homogeneous, decomposition):
    if decomposition is not None:
        if decomposition.homogeneous != homogeneous:
            raise ValueError("decomposition parity does not match the requested norm")
        return decomposition
    return decompose(grid, f, homogeneous)


def block_morrey_norms(grid: Grid, f: np.ndarray, bp: BMParams, ws: WindowSet = WindowSet(),
                       decomposition: DyadicDecomposition | None = None) -> dict[int, float]:
    d = _blocks(grid, f, bp.homogeneous, decomposition)
    return {j: morrey_norm(grid, b, bp.morrey, ws) for j, b in d.items()}


def besov_morrey_norm(grid: Grid, f: np.ndarray, bp: BMParams = BMParams(), ws: WindowSet = WindowSet(),
                      decomposition: DyadicDecomposition | None = None) -> float:
    """``l^r`` over blocks of ``2^(js) ||Delta_j f||_{M^p_q}``; homogeneous drops the mean."""
    norms = block_morrey_norms(grid, f, bp, ws, decomposition)
    return lr_aggregate((2.0 ** (j * bp.s) * v for j, v in norms.items()), bp.r)


def besov_infinity_norm(grid: Grid, f: np.ndarray, s: float = 0.0, r: float = INF,
                        homogeneous: bool = True, decomposition: DyadicDecomposition | None = None) -> float:
    """``B^s_{inf,r}``: ``l^r`` over blocks of ``2^(js) sup|Delta_j f|``."""
    d = _blocks(grid, f, homogeneous, decomposition)
    return lr_aggregate((2.0 ** (j * s) * sup_norm(grid, b) for j, b in d.items()), r)


# -- lemma evaluators ----------------------------------------------------------

LEMMAS_NORMS = ("2.3", "2.4", "2.5", "3.2")


def _require(cond: bool, msg: str):
    if not cond:
        raise ParameterError(msg)


def lemma_ratio(grid: Grid, f: np.ndarray, lemma_id: str, bp: BMParams = BMParams(),
                ws: WindowSet = WindowSet(), g: np.ndarray | None = None, seed: int | None = None) -> EstimateReport:
    """Evaluate one of the embedding-type inequalities on ``f`` (and ``g`` for 2.5).

    * ``2.3``: ``||f||_{N^s}`` against ``||f||_{M^p_q} + ||f||_{N.^s}`` (needs s > 0)
    * ``2.4``: ``||f||_{B.^{s-n/p}_{inf,r}}`` against ``||f||_{N.^s}`` (needs s > 0)
    * ``2.5``: ``||fg||_{N^s}`` against ``||f||_{N^s} ||g||_{N^s}`` (algebra range)
    * ``3.2``: ``||f||_inf`` against ``1 + ||f||_{B.^0_{inf,inf}} (log+ ||f||_{N^s} + 1)`` (s > n/p)
    """
    n = grid.dim
    lemma_id = str(lemma_id)
    inhom = bp.replace(homogeneous=False)
    hom = bp.replace(homogeneous=True)
    if lemma_id == "2.3":
        _require(bp.s > 0, f"lemma 2.3 needs s > 0, got s={bp.s}")
        lhs = besov_morrey_norm(grid, f, inhom, ws)
        terms = [("morrey", morrey_norm(grid, f, bp.morrey, ws)), ("homogeneous", besov_morrey_norm(grid, f, hom, ws))]
    elif lemma_id == "2.4":
        _require(bp.s > 0, f"lemma 2.4 needs s > 0, got s={bp.s}")
        lhs = besov_infinity_norm(grid, f, bp.s - n * _inv(bp.p), bp.r, homogeneous=True)
        terms = [("homogeneous", besov_morrey_norm(grid, f, hom, ws))]
    elif lemma_id == "2.5":
        _require(g is not None, "lemma 2.5 needs a second field g")
        _require(bp.is_algebra(n), f"lemma 2.5 needs s > n/p, or s = n/p with r = 1; got s={bp.s}, p={bp.p}, r={bp.r}")
        from .grid import padded_product

        lhs = besov_morrey_norm(grid, padded_product(grid, f, g), inhom, ws)
        terms = [("product", besov_morrey_norm(grid, f, inhom, ws) * besov_morrey_norm(grid, g, inhom, ws))]
    elif lemma_id == "3.2":
        _require(bp.s > n * _inv(bp.p), f"lemma 3.2 needs s > n/p, got s={bp.s}, n/p={n * _inv(bp.p)}")
        lhs = sup_norm(grid, f)
        if lhs == 0:
            terms = [("log_bound", 1.0)]
        else:
            b0 = besov_infinity_norm(grid, f, 0.0, INF, homogeneous=True)
            ns = besov_morrey_norm(grid, f, inhom, ws)
            terms = [("log_bound", 1.0 + b0 * (max(math.log(ns), 0.0) + 1.0))] if ns > 0 else [("log_bound", 1.0)]
    else:
        raise ParameterError(f"unknown lemma id {lemma_id!r}; known: {', '.join(LEMMAS_NORMS)}")
    return EstimateReport(f"lemma {lemma_id}", lhs, terms, {"bm": bp.to_dict(), "window": ws.to_dict()},
                          seed, grid.summary())


def derivative_magnitude(grid: Grid, f: np.ndarray, k: int = 1) -> np.ndarray:
    """Pointwise Frobenius norm of the tensor of all k-th order partials of a scalar."""
    if k < 1:
        raise ValueError("k must be >= 1")
    t = f
    for _ in range(k):
        t = gradient(grid, t) if t.ndim == grid.dim else np.stack([gradient(grid, c) for c in t.reshape((-1,) + grid.shape)])
    return magnitude(grid, t.reshape((-1,) + grid.shape))


def bernstein_ratios(grid: Grid, f: np.ndarray, mp: MorreyParams = MorreyParams(), ws: WindowSet = WindowSet(),
                     k: int = 1) -> dict[int, float]:
    """``||D^k Delta_j f|| / (2^(jk) ||Delta_j f||)`` for each nonzero homogeneous block."""
    out = {}
    for j, b in decompose(grid, f, homogeneous=True).items():
        base = morrey_norm(grid, b, mp, ws)
        if base <= 1e-13 * max(1.0, sup_norm(grid, f)):
            continue
        out[j] = morrey_norm(grid, derivative_magnitude(grid, b, k), mp, ws) / (2.0 ** (j * k) * base)
    return out

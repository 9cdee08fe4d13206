"""Bony decomposition of products and the Moser-type product harness.

With homogeneous blocks ``D_j`` and the mean ``m``,

    T_f g  = sum_j L_j(f) D_j g,   L_j(f) = m_f + sum_{i <= j-2} D_i f
    R(f,g) = sum_{|i-j| <= 1} D_i f D_j g + m_f m_g

so that ``f g = T_f g + T_g f + R(f, g)`` exactly. ``L_j`` is the low pass
``S_{j-2}`` (multiplier ``chi(2^(2-j)|xi|)``). Every product is formed on a
grid twice as fine and truncated back, so the identity closes to roundoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridError, PaddedGrid, check_field, padded_product, to_spectral
from .littlewood_paley import block_range, profile
from .morrey import BMParams, MorreyParams, ParameterError, WindowSet, _inv, besov_morrey_norm, morrey_norm
from .reports import EstimateReport


def _shared(grid: Grid, f: np.ndarray, g: np.ndarray):
    f = check_field(grid, f, vector=False)
    g = check_field(grid, g, vector=False)
    if f.shape != g.shape:
        raise GridError("f and g must live on the same grid")
    return f, g


def _low_multiplier(grid: Grid, j: int) -> np.ndarray:
    return profile(grid).low(j - 2)


def _paraproduct_fine(grid: Grid, F: np.ndarray, G: np.ndarray, pg: PaddedGrid) -> np.ndarray:
    prof = profile(grid)
    j_min, j_max = block_range(grid, True)
    total = np.zeros((pg.size,) * grid.dim)
    for j in range(j_min, j_max + 1):
        band = prof.band(j)
        if not np.any(band * G):
            continue
        total += pg.lift_spectral(F * _low_multiplier(grid, j)) * pg.lift_spectral(G * band)
    return total


def paraproduct(grid: Grid, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``T_f g``: low frequencies of ``f`` times each block of ``g``."""
    f, g = _shared(grid, f, g)
    pg = PaddedGrid(grid)
    return pg.lower(_paraproduct_fine(grid, to_spectral(grid, f), to_spectral(grid, g), pg))


def _remainder_fine(grid: Grid, F: np.ndarray, G: np.ndarray, pg: PaddedGrid) -> np.ndarray:
    prof = profile(grid)
    j_min, j_max = block_range(grid, True)
    zero = (0,) * grid.dim
    nn = grid.size**grid.dim
    total = np.full((pg.size,) * grid.dim, np.real(F[zero]) * np.real(G[zero]) / nn**2)
    for j in range(j_min, j_max + 1):
        fj = F * prof.band(j)
        if not np.any(fj):
            continue
        near = prof.band(j - 1) + prof.band(j) + prof.band(j + 1)
        near[zero] = 0.0
        total += pg.lift_spectral(fj) * pg.lift_spectral(G * near)
    return total


def remainder(grid: Grid, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``R(f, g)``: products of blocks with neighbouring indices (plus the mean product)."""
    f, g = _shared(grid, f, g)
    pg = PaddedGrid(grid)
    return pg.lower(_remainder_fine(grid, to_spectral(grid, f), to_spectral(grid, g), pg))


@dataclass
class BonySplit:
    t_fg: np.ndarray
    t_gf: np.ndarray
    remainder: np.ndarray
    residual: float

    @property
    def total(self) -> np.ndarray:
        return self.t_fg + self.t_gf + self.remainder


def bony_split(grid: Grid, f: np.ndarray, g: np.ndarray) -> BonySplit:
    """All three Bony parts; ``residual`` is the relative sup-error against the direct product."""
    f, g = _shared(grid, f, g)
    pg = PaddedGrid(grid)
    F, G = to_spectral(grid, f), to_spectral(grid, g)
    t_fg = pg.lower(_paraproduct_fine(grid, F, G, pg))
    t_gf = pg.lower(_paraproduct_fine(grid, G, F, pg))
    rem = pg.lower(_remainder_fine(grid, F, G, pg))
    direct = padded_product(grid, f, g)
    scale = float(np.max(np.abs(direct)))
    err = float(np.max(np.abs(t_fg + t_gf + rem - direct)))
    residual = err / scale if scale > 0 else err
    return BonySplit(t_fg, t_gf, rem, residual)


# -- Moser-type product estimates ---------------------------------------------

MOSER_VARIANTS = ("R-E7", "R-E8", "R-E9")


@dataclass(frozen=True)
class MoserSplit:
    """Exponent split for the product estimate; defaults put ``f`` and ``g`` in L^inf."""

    p1: float = math.inf
    p2: float | None = None
    p3: float = math.inf
    p4: float | None = None
    q1: float = math.inf
    q2: float | None = None
    q3: float = math.inf
    q4: float | None = None
    r1: float = math.inf
    r2: float | None = None
    r3: float = math.inf
    r4: float | None = None
    alpha: float = 1.0

    def resolved(self, bp: BMParams) -> "MoserSplit":
        def pick(v, default):
            return default if v is None else v

        return MoserSplit(
            self.p1, pick(self.p2, bp.p), self.p3, pick(self.p4, bp.p),
            self.q1, pick(self.q2, bp.q), self.q3, pick(self.q4, bp.q),
            self.r1, pick(self.r2, bp.r), self.r3, pick(self.r4, bp.r),
            self.alpha,
        )

    def validate(self, bp: BMParams, variant: str):
        def close(a, b):
            return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)

        p, q, r = bp.p, bp.q, bp.r
        if not close(_inv(p), _inv(self.p1) + _inv(self.p2)):
            raise ParameterError("split violates 1/p = 1/p1 + 1/p2")
        if not close(_inv(p), _inv(self.p3) + _inv(self.p4)):
            raise ParameterError("split violates 1/p = 1/p3 + 1/p4")
        if _inv(q) > _inv(self.q1) + _inv(self.q2) + 1e-12:
            raise ParameterError("split violates 1/q <= 1/q1 + 1/q2")
        if _inv(q) > _inv(self.q3) + _inv(self.q4) + 1e-12:
            raise ParameterError("split violates 1/q <= 1/q3 + 1/q4")
        for name, (pp, qq) in {"(p1,q1)": (self.p1, self.q1), "(p2,q2)": (self.p2, self.q2),
                               "(p3,q3)": (self.p3, self.q3), "(p4,q4)": (self.p4, self.q4)}.items():
            if not 1 <= qq <= pp:
                raise ParameterError(f"split violates 1 <= q <= p for {name}")
        if variant == "R-E9":
            if not self.alpha > 0:
                raise ParameterError("split violates alpha > 0")
            if not close(_inv(r), _inv(self.r1) + _inv(self.r2)):
                raise ParameterError("split violates 1/r = 1/r1 + 1/r2")
            if not close(_inv(r), _inv(self.r3) + _inv(self.r4)):
                raise ParameterError("split violates 1/r = 1/r3 + 1/r4")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def moser_report(grid: Grid, f: np.ndarray, g: np.ndarray, bp: BMParams = BMParams(), variant: str = "R-E7",
                 split: MoserSplit = MoserSplit(), ws: WindowSet = WindowSet(), seed: int | None = None) -> EstimateReport:
    """Product estimate ``||fg|| <= C (...)`` in one of its three forms.

    R-E7 uses homogeneous norms, R-E8 inhomogeneous ones, R-E9 trades
    ``alpha`` derivatives between a negative-order and a higher-order norm.
    """
    if variant not in MOSER_VARIANTS:
        raise ParameterError(f"unknown variant {variant!r}; known: {', '.join(MOSER_VARIANTS)}")
    f, g = _shared(grid, f, g)
    n = grid.dim
    if not ((bp.s > n * _inv(bp.p) and not math.isinf(bp.p)) or (math.isinf(bp.p) and math.isinf(bp.r))):
        raise ParameterError(f"product estimate needs s > n/p with p < inf (or p = r = inf); got s={bp.s}, p={bp.p}")
    sp = split.resolved(bp)
    sp.validate(bp, variant)
    hom = variant != "R-E8"
    target = bp.replace(homogeneous=hom)
    lhs = besov_morrey_norm(grid, padded_product(grid, f, g), target, ws)

    if variant in ("R-E7", "R-E8"):
        def term(a, b, p_m, q_m, p_b, q_b):
            m = morrey_norm(grid, a, MorreyParams(p_m, q_m), ws)
            return m * besov_morrey_norm(grid, b, target.replace(p=p_b, q=q_b), ws) if m else 0.0

        terms = [("f_morrey_g_besov", term(f, g, sp.p1, sp.q1, sp.p2, sp.q2)),
                 ("g_morrey_f_besov", term(g, f, sp.p3, sp.q3, sp.p4, sp.q4))]
    else:
        a = sp.alpha

        def term(x, y, p_lo, q_lo, r_lo, p_hi, q_hi, r_hi):
            lo = besov_morrey_norm(grid, x, BMParams(-a, MorreyParams(p_lo, q_lo), r_lo, True), ws)
            if lo == 0:
                return 0.0
            return lo * besov_morrey_norm(grid, y, BMParams(bp.s + a, MorreyParams(p_hi, q_hi), r_hi, True), ws)

        terms = [("f_negative_g_positive", term(f, g, sp.p1, sp.q1, sp.r1, sp.p2, sp.q2, sp.r2)),
                 ("g_negative_f_positive", term(g, f, sp.p3, sp.q3, sp.r3, sp.p4, sp.q4, sp.r4))]
    params = {"bm": bp.to_dict(), "variant": variant, "split": sp.to_dict(), "window": ws.to_dict()}
    return EstimateReport(f"lemma 3.3 {variant}", lhs, terms, params, seed, grid.summary())

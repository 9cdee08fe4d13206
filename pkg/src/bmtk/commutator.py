"""Commutators ``[v.grad, Delta_j] theta`` and the two commutator-estimate harnesses.

The commutator is evaluated straight from its definition,
``(v.grad)(Delta_j theta) - Delta_j((v.grad) theta)``, with alias-free
products. The mean of ``v`` is dropped first: constant-coefficient
advection commutes with every Fourier multiplier, and removing it makes
the constant-advector case vanish identically rather than to roundoff.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, PaddedGrid, check_field, gradient, require_solenoidal, to_physical, to_spectral
from .littlewood_paley import block_range, dyadic_block_multiplier
from .morrey import (BMParams, MorreyParams, ParameterError, WindowSet, _inv, besov_morrey_norm,
                     lr_aggregate, magnitude, morrey_norm, sup_norm)
from .reports import EstimateReport


@dataclass(frozen=True)
class CommutatorSplit:
    """``(p1, q1, p2, q2)``; ``None`` entries default to ``p1 = inf, q1 = q2 = q, p2 = p``."""

    p1: float = math.inf
    q1: float | None = None
    p2: float | None = None
    q2: float | None = None

    def resolved(self, bp: BMParams) -> "CommutatorSplit":
        p2 = self.p2
        if p2 is None:
            rest = _inv(bp.p) - _inv(self.p1)
            p2 = math.inf if rest == 0 else 1.0 / rest
        return CommutatorSplit(self.p1, bp.q if self.q1 is None else self.q1, p2,
                               bp.q if self.q2 is None else self.q2)

    def validate(self, bp: BMParams):
        if not math.isclose(_inv(bp.p), _inv(self.p1) + _inv(self.p2), rel_tol=1e-12, abs_tol=1e-12):
            raise ParameterError("split violates 1/p = 1/p1 + 1/p2")
        if _inv(bp.q) > _inv(self.q1) + _inv(self.q2) + 1e-12:
            raise ParameterError("split violates 1/q <= 1/q1 + 1/q2")
        if not 1 <= self.q1 <= self.p1:
            raise ParameterError("split violates 1 <= q1 <= p1")
        if not 1 <= self.q2 <= self.p2:
            raise ParameterError("split violates 1 <= q2 <= p2")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _fluctuation(grid: Grid, v: np.ndarray) -> np.ndarray:
    out = v - np.mean(v, axis=grid.axes, keepdims=True)
    # the rounded mean of a constant component is not always the constant itself
    flat = np.ptp(v, axis=grid.axes) == 0
    out[flat] = 0.0
    return out


class _CommutatorEngine:
    """Shared lifts of ``v`` and ``theta`` so that many blocks reuse one set of transforms."""

    def __init__(self, grid: Grid, v: np.ndarray, theta: np.ndarray, homogeneous: bool, check: bool = True):
        v = check_field(grid, v, vector=True)
        theta = check_field(grid, theta)
        if check:
            require_solenoidal(grid, v, name="v")
        self.grid, self.homogeneous = grid, homogeneous
        self.scalar = theta.ndim == grid.dim
        self.pg = PaddedGrid(grid)
        vt = _fluctuation(grid, v)
        self.v_fine = np.stack([self.pg.lift(c) for c in vt])
        kd = grid.derivative_wavenumbers
        thetas = theta[None] if self.scalar else theta
        self.Theta = [to_spectral(grid, t) for t in thetas]
        self.dTheta = [[1j * kd[i] * T for i in range(grid.dim)] for T in self.Theta]
        # (v.grad) theta, alias-free, in coarse spectral layout
        self.A = [self.pg.lower_spectral(self._dot_fine(dT)) for dT in self.dTheta]

    def _dot_fine(self, dT) -> np.ndarray:
        return sum(self.v_fine[i] * self.pg.lift_spectral(dT[i]) for i in range(self.grid.dim))

    def block(self, j: int) -> np.ndarray:
        phi = dyadic_block_multiplier(self.grid, j, self.homogeneous)
        out = []
        for dT, A in zip(self.dTheta, self.A):
            if not np.any(phi):
                out.append(np.zeros(self.grid.shape))
                continue
            first = self.pg.lower_spectral(self._dot_fine([phi * d for d in dT]))
            out.append(to_physical(self.grid, first - phi * A))
        return out[0] if self.scalar else np.stack(out)


def commutator_field(grid: Grid, v: np.ndarray, theta: np.ndarray, j: int, homogeneous: bool = True,
                     check: bool = True) -> np.ndarray:
    """``(v.grad) Delta_j theta - Delta_j (v.grad) theta`` for divergence-free ``v``."""
    return _CommutatorEngine(grid, v, theta, homogeneous, check).block(j)


def commutator_blocks(grid: Grid, v: np.ndarray, theta: np.ndarray, homogeneous: bool = True,
                      check: bool = True) -> dict[int, np.ndarray]:
    """All nonzero-range commutator blocks through one shared set of transforms."""
    eng = _CommutatorEngine(grid, v, theta, homogeneous, check)
    j_min, j_max = block_range(grid, homogeneous)
    return {j: eng.block(j) for j in range(j_min, j_max + 1)}


def commutator_lhs(grid: Grid, v: np.ndarray, theta: np.ndarray, bp: BMParams, ws: WindowSet = WindowSet(),
                   blocks: dict[int, np.ndarray] | None = None) -> float:
    """``|| 2^(js) ||[v.grad, Delta_j] theta||_{M^p_q} ||_{l^r}``."""
    if blocks is None:
        blocks = commutator_blocks(grid, v, theta, homogeneous=True)
    return lr_aggregate((2.0 ** (j * bp.s) * morrey_norm(grid, c, bp.morrey, ws) for j, c in blocks.items()), bp.r)


def _grad_sup(grid: Grid, v: np.ndarray) -> float:
    J = gradient(grid, v)
    return sup_norm(grid, J.reshape((-1,) + grid.shape))


def _prepare(grid, v, theta, bp, split, lemma, s_ok, s_msg):
    if not s_ok:
        raise ParameterError(s_msg)
    if math.isinf(bp.p):
        raise ParameterError(f"lemma {lemma} needs p < inf")
    sp = split.resolved(bp)
    sp.validate(bp)
    require_solenoidal(grid, check_field(grid, v, vector=True), name="v")
    return sp


def lemma34_report(grid: Grid, v: np.ndarray, theta: np.ndarray, bp: BMParams = BMParams(),
                   split: CommutatorSplit = CommutatorSplit(), ws: WindowSet = WindowSet(),
                   seed: int | None = None) -> EstimateReport:
    """Commutator estimate with ``||grad theta||_{M^p1_q1} ||v||_{N^s_{p2,q2,r}}`` as second term."""
    sp = _prepare(grid, v, theta, bp, split, "3.4", bp.s > 0, f"lemma 3.4 needs s > 0, got s={bp.s}")
    lhs = commutator_lhs(grid, v, theta, bp, ws)
    hom = bp.replace(homogeneous=True)
    grad_theta = magnitude(grid, gradient(grid, theta).reshape((-1,) + grid.shape))
    terms = [
        ("grad_v_sup_theta_hom", _grad_sup(grid, v) * besov_morrey_norm(grid, theta, hom, ws)),
        ("grad_theta_morrey_v_inhom",
         morrey_norm(grid, grad_theta, MorreyParams(sp.p1, sp.q1), ws)
         * besov_morrey_norm(grid, v, bp.replace(homogeneous=False, p=sp.p2, q=sp.q2), ws)),
    ]
    params = {"bm": bp.to_dict(), "split": sp.to_dict(), "window": ws.to_dict()}
    return EstimateReport("lemma 3.4", lhs, terms, params, seed, grid.summary())


def lemma35_report(grid: Grid, v: np.ndarray, theta: np.ndarray, bp: BMParams = BMParams(s=1.5),
                   split: CommutatorSplit = CommutatorSplit(), ws: WindowSet = WindowSet(),
                   seed: int | None = None) -> EstimateReport:
    """Commutator estimate with ``||theta||_{M^p1_q1} ||v||_{N.^{s+1}_{p2,q2,r}}`` as second term.

    Unlike lemma 3.4 the velocity norm here is homogeneous; both are kept literal.
    """
    sp = _prepare(grid, v, theta, bp, split, "3.5", bp.s > -1, f"lemma 3.5 needs s > -1, got s={bp.s}")
    lhs = commutator_lhs(grid, v, theta, bp, ws)
    hom = bp.replace(homogeneous=True)
    terms = [
        ("grad_v_sup_theta_hom", _grad_sup(grid, v) * besov_morrey_norm(grid, theta, hom, ws)),
        ("theta_morrey_v_hom_s_plus_1",
         morrey_norm(grid, theta, MorreyParams(sp.p1, sp.q1), ws)
         * besov_morrey_norm(grid, v, hom.replace(s=bp.s + 1, p=sp.p2, q=sp.q2), ws)),
    ]
    params = {"bm": bp.to_dict(), "split": sp.to_dict(), "window": ws.to_dict()}
    return EstimateReport("lemma 3.5", lhs, terms, params, seed, grid.summary())

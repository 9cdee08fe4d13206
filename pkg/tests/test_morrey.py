import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmtk.corpus import single_mode
from bmtk.grid import Grid
from bmtk.littlewood_paley import decompose
from bmtk.morrey import (BMParams, MorreyParams, ParameterError, WindowSet, bernstein_ratios, besov_infinity_norm,
                         besov_morrey_norm, block_morrey_norms, lemma_ratio, lp_norm, lr_aggregate, morrey_norm,
                         sup_norm, window_sums)
from bmtk.reports import EstimateError, EstimateReport, ratio

from conftest import smooth_scalar, smooth_velocity
from oracles import brute_force_morrey, direct_sequence_norm

INF = math.inf


class TestParams:
    @pytest.mark.parametrize("p,q", [(4, 0), (2, 3), (4, 0.5), (float("nan"), 2)])
    def test_invalid_morrey_pairs(self, p, q):
        with pytest.raises(ParameterError, match="1 <= q <= p"):
            MorreyParams(p, q)

    def test_valid_edges(self):
        MorreyParams(1, 1)
        MorreyParams(INF, INF)
        MorreyParams(INF, 3)

    def test_r_below_one(self):
        with pytest.raises(ParameterError):
            BMParams(r=0.5)

    def test_replace(self):
        bp = BMParams().replace(s=1.0, q=1.0, homogeneous=True)
        assert (bp.s, bp.p, bp.q, bp.r, bp.homogeneous) == (1.0, 4.0, 1.0, 2.0, True)
        with pytest.raises(TypeError):
            BMParams().replace(bogus=1)

    def test_algebra_range(self):
        assert BMParams(s=0.6).is_algebra(2)
        assert not BMParams(s=0.5, r=2).is_algebra(2)
        assert BMParams(s=0.5, r=1).is_algebra(2)

    def test_window_validation(self):
        g = Grid(2, 32)
        with pytest.raises(ParameterError):
            WindowSet(k_max=6).resolve(g)
        with pytest.raises(ParameterError):
            WindowSet(stride=3).resolve(g)
        radii, widths, stride = WindowSet().resolve(g)
        assert widths == [32, 16, 8, 4, 2]
        assert radii[0] == pytest.approx(math.pi)


class TestWindowSums:
    def test_against_direct_sums(self):
        a = np.random.default_rng(0).random((16, 16))
        for w in (1, 2, 4, 8, 16):
            got = window_sums(a, w)
            offs = np.arange(w) - w // 2
            for i, j in [(0, 0), (3, 15), (15, 7)]:
                expect = a[np.ix_((i + offs) % 16, (j + offs) % 16)].sum()
                assert got[i, j] == pytest.approx(expect, rel=1e-13)

    def test_stride_subsamples_centres(self):
        a = np.random.default_rng(1).random((16, 16))
        assert np.allclose(window_sums(a, 4, stride=4), window_sums(a, 4)[::4, ::4])

    def test_three_dimensions(self):
        a = np.random.default_rng(2).random((8, 8, 8))
        assert window_sums(a, 8)[0, 0, 0] == pytest.approx(a.sum())


class TestMorreyNorm:
    @pytest.mark.parametrize("p,q", [(4, 2), (2, 1), (8, 3), (INF, 2)])
    def test_brute_force_oracle(self, p, q):
        g = Grid(2, 16)
        f = np.random.default_rng(int(q * 7)).standard_normal(g.shape)
        assert morrey_norm(g, f, MorreyParams(p, q)) == pytest.approx(brute_force_morrey(f, g.length, p, q), rel=1e-12)

    def test_q_equal_p_is_lp(self, grid32):
        f = smooth_scalar(grid32, 2)
        for p in (1.0, 2.0, 3.5):
            assert morrey_norm(grid32, f, MorreyParams(p, p)) == pytest.approx(lp_norm(grid32, f, p), rel=1e-12)

    def test_sup_special_case(self, grid32):
        f = smooth_scalar(grid32, 2)
        assert morrey_norm(grid32, f, MorreyParams(INF, INF)) == sup_norm(grid32, f)

    def test_constant_field(self):
        # sup over r of r^(n/p - n/q) c (2r)^(n/q) is reached at the largest radius L/2
        g = Grid(2, 32)
        c, p, q = 1.7, 4.0, 2.0
        expect = c * 2 ** (2 / q) * (g.length / 2) ** (2 / p)
        assert morrey_norm(g, np.full(g.shape, c), MorreyParams(p, q)) == pytest.approx(expect, rel=1e-12)

    def test_vector_uses_pointwise_magnitude(self, grid32):
        v = smooth_velocity(grid32, 3)
        assert morrey_norm(grid32, v) == pytest.approx(morrey_norm(grid32, np.sqrt(v[0] ** 2 + v[1] ** 2)))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), shift=st.tuples(st.integers(0, 15), st.integers(0, 15)),
           lam=st.floats(-5, 5).filter(lambda x: abs(x) > 1e-3))
    def test_shift_invariance_and_homogeneity(self, seed, shift, lam):
        g = Grid(2, 16)
        f = np.random.default_rng(seed).standard_normal(g.shape)
        base = morrey_norm(g, f)
        assert morrey_norm(g, np.roll(f, shift, axis=(0, 1))) == pytest.approx(base, rel=1e-12)
        assert morrey_norm(g, lam * f) == pytest.approx(abs(lam) * base, rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31), q1=st.floats(1.5, 4.0), frac=st.floats(0.1, 0.9))
    def test_nesting_constant(self, seed, q1, frac):
        """For q2 < q1, Hölder on each window gives the factor 2^(n(1/q2 - 1/q1))."""
        g = Grid(2, 16)
        q2 = 1.0 + frac * (q1 - 1.0)
        f = np.random.default_rng(seed).standard_normal(g.shape)
        lhs = morrey_norm(g, f, MorreyParams(4.0, q2))
        rhs = morrey_norm(g, f, MorreyParams(4.0, q1))
        assert lhs <= 2 ** (2 * (1 / q2 - 1 / q1)) * rhs * (1 + 1e-12)

    def test_stride_gives_lower_bound(self, grid64):
        f = smooth_scalar(grid64, 4)
        assert morrey_norm(grid64, f, ws=WindowSet(stride=4)) <= morrey_norm(grid64, f) * (1 + 1e-14)


class TestBesovMorrey:
    def test_sequence_aggregate(self):
        vals = [3.0, 4.0, 1.0]
        for r in (1.0, 2.0, 3.0, INF):
            assert lr_aggregate(vals, r) == pytest.approx(direct_sequence_norm(vals, r))

    def test_single_mode_has_one_block(self):
        g = Grid(2, 64)
        f = single_mode(g, (8, 0))
        bp = BMParams(s=1.5, homogeneous=True)
        assert besov_morrey_norm(g, f, bp) == pytest.approx(2**4.5 * morrey_norm(g, f), rel=1e-12)

    def test_homogeneous_ignores_mean(self, grid32):
        f = smooth_scalar(grid32, 5)
        bp = BMParams(homogeneous=True)
        assert besov_morrey_norm(grid32, f + 4.0, bp) == pytest.approx(besov_morrey_norm(grid32, f, bp), rel=1e-12)

    def test_inhomogeneous_sees_mean(self, grid32):
        bp = BMParams(homogeneous=False)
        assert besov_morrey_norm(grid32, np.full(grid32.shape, 2.0), bp) > 0
        assert besov_morrey_norm(grid32, np.full(grid32.shape, 2.0), bp.replace(homogeneous=True)) == 0

    def test_reuses_decomposition(self, grid32):
        f = smooth_scalar(grid32, 6)
        d = decompose(grid32, f, homogeneous=False)
        bp = BMParams()
        assert besov_morrey_norm(grid32, f, bp, decomposition=d) == besov_morrey_norm(grid32, f, bp)
        with pytest.raises(ValueError):
            besov_morrey_norm(grid32, f, bp.replace(homogeneous=True), decomposition=d)

    def test_block_norms_keys(self, grid32):
        norms = block_morrey_norms(grid32, smooth_scalar(grid32, 1), BMParams(homogeneous=True))
        assert min(norms) == 0 and max(norms) == 5

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**31))
    def test_l_infinity_below_l_one(self, seed):
        g = Grid(2, 32)
        f = np.random.default_rng(seed).standard_normal(g.shape)
        assert besov_infinity_norm(g, f, 0, INF) <= besov_infinity_norm(g, f, 0, 1.0)

    def test_besov_infinity_below_sup_times_overlap(self, grid64):
        # each block multiplier has L^1 kernel norm bounded, so B^0_inf,inf <= C sup
        f = smooth_scalar(grid64, 7, kmax=16)
        assert besov_infinity_norm(grid64, f) <= 3.0 * sup_norm(grid64, f)


class TestEstimates:
    def test_report_roundtrip_and_ratio(self, grid32):
        rep = lemma_ratio(grid32, smooth_scalar(grid32, 1), "2.3", seed=5)
        again = EstimateReport.from_dict(rep.to_dict())
        assert again.ratio == rep.ratio and again.seed == 5 and again.lemma == "lemma 2.3"
        assert rep.rhs == pytest.approx(sum(v for _, v in rep.rhs_terms))

    def test_ratio_edge_cases(self):
        assert ratio(0.0, 0.0) == 0.0
        with pytest.raises(EstimateError):
            ratio(1.0, 0.0)

    def test_negative_lhs_rejected(self):
        with pytest.raises(EstimateError):
            EstimateReport("x", -1.0, [("a", 1.0)])

    @pytest.mark.parametrize("lemma", ["2.3", "2.4", "2.5", "3.2"])
    def test_lemmas_give_finite_ratios(self, grid64, lemma):
        f, g = smooth_scalar(grid64, 1, kmax=16), smooth_scalar(grid64, 2, kmax=16)
        rep = lemma_ratio(grid64, f, lemma, g=g)
        assert math.isfinite(rep.ratio) and rep.ratio > 0

    def test_lemma_preconditions(self, grid32):
        f = smooth_scalar(grid32, 1)
        with pytest.raises(ParameterError):
            lemma_ratio(grid32, f, "2.3", BMParams(s=-1.0))
        with pytest.raises(ParameterError):
            lemma_ratio(grid32, f, "2.5", BMParams(s=0.2), g=f)
        with pytest.raises(ParameterError):
            lemma_ratio(grid32, f, "2.5")
        with pytest.raises(ParameterError, match="known"):
            lemma_ratio(grid32, f, "7.7")

    def test_sobolev_embedding_holds_with_unit_constant_on_single_mode(self):
        g = Grid(2, 64)
        rep = lemma_ratio(g, single_mode(g, (4, 0)), "2.4", BMParams(s=1.0, homogeneous=True))
        assert 0 < rep.ratio < 10

    def test_log_inequality_on_zero(self, grid32):
        assert lemma_ratio(grid32, np.zeros(grid32.shape), "3.2").ratio == 0.0

    def test_bernstein_band(self, grid64):
        ratios = bernstein_ratios(grid64, smooth_scalar(grid64, 3, kmax=16))
        vals = np.array(list(ratios.values()))
        assert np.all(vals > 0.2) and np.all(vals < 5)

    def test_bernstein_single_mode(self):
        # |grad cos(8x)| = 8|sin 8x|; the two Morrey norms differ only by that factor
        g = Grid(2, 64)
        r = bernstein_ratios(g, single_mode(g, (8, 0)), MorreyParams(2, 2))
        assert list(r) == [3] and r[3] == pytest.approx(1.0, rel=1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmtk.fieldio import read_field, write_field
from bmtk.grid import (DivergenceError, Grid, GridError, PaddedGrid, curl, dealias, divergence, gradient,
                       laplacian, leray_project, padded_product, pressure_gradient, require_solenoidal,
                       spectral_derivative, to_physical, to_spectral)

from conftest import rel, smooth_scalar, smooth_velocity


class TestGrid:
    def test_defaults(self):
        g = Grid()
        assert g.shape == (64, 64)
        assert g.spacing == pytest.approx(2 * math.pi / 64)
        assert g.cell_volume == pytest.approx(g.spacing**2)

    @pytest.mark.parametrize("kw", [dict(size=12), dict(size=4), dict(dim=1), dict(dim=4), dict(length=-1.0),
                                    dict(length=float("inf"))])
    def test_rejects_bad_parameters(self, kw):
        with pytest.raises(GridError):
            Grid(**kw)

    def test_coordinates_span_the_torus(self):
        g = Grid(2, 16, 3.0)
        x = g.coordinates()
        assert x.shape == (2, 16, 16)
        assert x[0, 0, 0] == 0.0 and x[0, -1, 0] == pytest.approx(3.0 - 3.0 / 16)

    def test_dealias_mask_cutoff(self):
        g = Grid(2, 64)
        k = g.integer_modes
        assert np.array_equal(g.dealias_mask, np.all(np.abs(k) <= 21, axis=0))


class TestTransforms:
    def test_round_trip(self, grid32):
        f = np.random.default_rng(1).standard_normal(grid32.shape)
        assert np.allclose(to_physical(grid32, to_spectral(grid32, f)), f, atol=1e-14)

    def test_nonfinite_input_rejected(self, grid32):
        f = np.zeros(grid32.shape)
        f[3, 4] = np.nan
        with pytest.raises(GridError, match="non-finite"):
            to_spectral(grid32, f)

    def test_shape_mismatch(self, grid32):
        with pytest.raises(GridError):
            gradient(grid32, np.zeros((16, 16)))

    def test_single_mode_derivatives(self):
        g = Grid(2, 32)
        x, y = g.coordinates()
        f = np.sin(3 * x) * np.cos(2 * y)
        assert np.allclose(spectral_derivative(g, f, 0), 3 * np.cos(3 * x) * np.cos(2 * y), atol=1e-12)
        assert np.allclose(spectral_derivative(g, f, 1, order=2), -4 * f, atol=1e-11)
        assert np.allclose(laplacian(g, f), -13 * f, atol=1e-11)

    def test_nyquist_mode_has_zero_first_derivative(self):
        g = Grid(2, 16)
        x = g.coordinates()[0]
        f = np.cos(8 * x)
        assert np.max(np.abs(spectral_derivative(g, f, 0))) < 1e-13

    def test_gradient_against_finite_differences(self):
        """Five-point stencil at N=256 on a band-limited field; stencil error ~ h^4 k^5 / 30."""
        g = Grid(2, 256)
        f = smooth_scalar(g, 11, kmax=4)
        h = g.spacing
        grad = gradient(g, f)
        for ax in range(2):
            fd = (-np.roll(f, -2, ax) + 8 * np.roll(f, -1, ax) - 8 * np.roll(f, 1, ax) + np.roll(f, 2, ax)) / (12 * h)
            assert rel(grad[ax], fd) < 5e-5

    def test_vector_gradient_layout(self, grid32):
        v = smooth_velocity(grid32, 3)
        J = gradient(grid32, v)
        assert J.shape == (2, 2, 32, 32)
        assert np.allclose(J[1, 0], spectral_derivative(grid32, v[1], 0))

    def test_curl_of_rotation(self):
        g = Grid(2, 32)
        x, y = g.coordinates()
        v = np.stack([-np.sin(y), np.sin(x)])
        assert np.allclose(curl(g, v), np.cos(x) + np.cos(y), atol=1e-12)

    def test_curl_3d_shape(self):
        g = Grid(3, 8)
        x, y, z = g.coordinates()
        v = np.stack([np.sin(y), np.zeros_like(x), np.zeros_like(x)])
        w = curl(g, v)
        assert w.shape == (3, 8, 8, 8)
        assert np.allclose(w[2], -np.cos(y), atol=1e-12)


class TestLeray:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_projection_properties(self, seed):
        g = Grid(2, 32)
        v = np.random.default_rng(seed).standard_normal((2, 32, 32))
        pv = leray_project(g, v)
        assert np.max(np.abs(divergence(g, pv))) < 1e-10
        assert np.allclose(leray_project(g, pv), pv, atol=1e-12)
        # orthogonal complement
        assert abs(np.sum(pv * (v - pv))) < 1e-9 * np.sum(v**2)

    def test_gradients_are_annihilated(self, grid32):
        phi = smooth_scalar(grid32, 5)
        assert np.max(np.abs(leray_project(grid32, gradient(grid32, phi)))) < 1e-12

    def test_require_solenoidal(self, grid32):
        require_solenoidal(grid32, smooth_velocity(grid32, 2))
        with pytest.raises(DivergenceError):
            require_solenoidal(grid32, gradient(grid32, smooth_scalar(grid32, 2)))


def _trefethen_d1(n: int, length: float) -> np.ndarray:
    """Periodic spectral differentiation matrix (even n), scaled to period ``length``."""
    h = 2 * math.pi / n
    i = np.arange(n)
    diff = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        D = 0.5 * (-1.0) ** diff / np.tan(diff * h / 2)
    D[diff == 0] = 0.0
    return D * (2 * math.pi / length)


def test_pressure_gradient_against_dense_solve():
    """Dense Kronecker-product Poisson solve at N=32 with inputs band-limited to |k| <= 5."""
    n = 32
    g = Grid(2, n)
    w = smooth_velocity(g, 7, kmax=5)
    v = smooth_velocity(g, 8, kmax=5, trial=1)
    D = _trefethen_d1(n, g.length)
    eye = np.eye(n)
    Dx, Dy = np.kron(D, eye), np.kron(eye, D)
    flat = [c.ravel() for c in v]
    adv = [w[0].ravel() * (Dx @ c) + w[1].ravel() * (Dy @ c) for c in flat]
    rhs = Dx @ adv[0] + Dy @ adv[1]
    lap = Dx @ Dx + Dy @ Dy
    P = np.linalg.lstsq(-lap, rhs, rcond=1e-10)[0]
    dense = np.stack([(Dx @ P).reshape(n, n), (Dy @ P).reshape(n, n)])
    assert rel(pressure_gradient(g, w, v), dense) < 1e-10


def test_pressure_gradient_of_taylor_green_balances_advection():
    from bmtk.corpus import taylor_green
    from bmtk.grid import advect

    g = Grid(2, 32)
    tg = taylor_green(g)
    assert np.max(np.abs(advect(g, tg, tg) + pressure_gradient(g, tg, tg))) < 1e-13


class TestProducts:
    def _coeffs(self, n, kmax, seed):
        rng = np.random.default_rng(seed)
        C = np.zeros((n, n), dtype=complex)
        r = np.arange(-kmax, kmax + 1)
        for a in r:
            for b in r:
                C[a % n, b % n] = rng.standard_normal() + 1j * rng.standard_normal()
        C = 0.5 * (C + np.conj(np.roll(np.flip(C, (0, 1)), 1, (0, 1))))
        return C

    def test_padded_product_matches_exact_convolution(self):
        n, kmax = 16, 7
        g = Grid(2, n)
        A, B = self._coeffs(n, kmax, 1), self._coeffs(n, kmax, 2)
        f, h = np.real(np.fft.ifftn(A)) * n * n, np.real(np.fft.ifftn(B)) * n * n
        # exact product coefficients by direct convolution over |k_i| <= 2 kmax
        m = 2 * kmax
        conv = np.zeros((2 * m + 1, 2 * m + 1), dtype=complex)
        r = range(-kmax, kmax + 1)
        for a1 in r:
            for b1 in r:
                ca = A[a1 % n, b1 % n]
                for a2 in r:
                    for b2 in r:
                        conv[a1 + a2 + m, b1 + b2 + m] += ca * B[a2 % n, b2 % n]
        expect = np.zeros((n, n), dtype=complex)
        for a in range(-n // 2 + 1, n // 2):
            for b in range(-n // 2 + 1, n // 2):
                expect[a % n, b % n] = conv[a + m, b + m]
        got = np.fft.fftn(padded_product(g, f, h)) / (n * n)
        assert np.max(np.abs(got - expect)) < 1e-12 * np.max(np.abs(expect))

    def test_dealias_zeroes_the_top_third(self, grid32):
        f = np.random.default_rng(4).standard_normal(grid32.shape)
        F = to_spectral(grid32, dealias(grid32, f))
        assert np.max(np.abs(F[~grid32.dealias_mask])) < 1e-10
        assert np.allclose(F[grid32.dealias_mask], to_spectral(grid32, f)[grid32.dealias_mask])

    def test_lift_lower_round_trip(self, grid32):
        f = smooth_scalar(grid32, 9)
        pg = PaddedGrid(grid32)
        assert pg.lift(f).shape == (64, 64)
        assert np.allclose(pg.lower(pg.lift(f)), f, atol=1e-13)


class TestFieldIO:
    def test_scalar_round_trip_is_bit_exact(self, tmp_path, grid32):
        f = np.random.default_rng(0).standard_normal(grid32.shape)
        write_field(tmp_path / "f", grid32, f)
        g2, back = read_field(tmp_path / "f")
        assert g2 == grid32
        assert back.tobytes() == f.tobytes()

    def test_header_and_payload(self, tmp_path, grid32):
        import json

        write_field(tmp_path / "f", grid32, np.ones(grid32.shape))
        head = json.loads((tmp_path / "f.json").read_text())
        assert head["dtype"] == "f64le" and head["order"] == "row-major" and head["kind"] == "scalar"
        assert (tmp_path / "f.bin").stat().st_size == 32 * 32 * 8

    def test_vector_components(self, tmp_path, grid32):
        v = smooth_velocity(grid32, 1)
        paths = write_field(tmp_path / "v", grid32, v)
        assert len(paths) == 4
        _, back = read_field(tmp_path / "v")
        assert np.array_equal(back, v)

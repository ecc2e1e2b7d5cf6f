"""Fourier multiplier operators against closed forms.

Single-mode cases have exact answers; everything here is pinned at
1e-12 relative unless stated otherwise.
"""

import numpy as np
import pytest

from blab import (Field, Grid, VectorField, advect, biot_savart, curl,
                  dealiased_product, divergence, fractional_laplacian,
                  gradient, gradient_norm, lebesgue_norm, leray_project,
                  mean_value, partial_derivative, riesz_transform,
                  vector_lebesgue_norm)


@pytest.fixture(scope="module")
def g64():
    return Grid(64)


def _f(g, fn):
    return Field.from_function(g, fn)


def assert_fields_close(actual, expected_values, tol=1e-12):
    scale = max(np.abs(expected_values).max(), 1.0)
    assert np.abs(actual.values - expected_values).max() <= tol * scale


class TestFractionalLaplacian:
    def test_single_mode_alpha_one(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x1))
        assert_fields_close(fractional_laplacian(f, 1.0), np.sin(g64.x1))

    def test_constant_annihilated(self, g64):
        f = _f(g64, lambda x1, x2: 0 * x1 + 3.7)
        out = fractional_laplacian(f, 1.3)
        assert np.abs(out.values).max() < 1e-12

    def test_sqrt_gain_alpha_half(self, g64):
        f = _f(g64, lambda x1, x2: np.cos(2 * x2))
        expected = np.sqrt(2.0) * np.cos(2 * g64.x2)
        assert_fields_close(fractional_laplacian(f, 0.5), expected)

    def test_alpha_two_is_minus_laplacian(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(3 * x1) * np.cos(x2))
        expected = 10.0 * f.values  # |k|^2 = 9 + 1
        assert_fields_close(fractional_laplacian(f, 2.0), expected)

    @pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5])
    def test_alpha_range_enforced(self, g64, alpha):
        f = Field.zeros(g64)
        with pytest.raises(ValueError):
            fractional_laplacian(f, alpha)


class TestRieszTransform:
    def test_sin_x1(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x1))
        assert_fields_close(riesz_transform(f), np.cos(g64.x1))

    def test_sin_x2_killed(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x2))
        assert np.abs(riesz_transform(f).values).max() < 1e-12

    def test_diagonal_mode(self, g64):
        f = _f(g64, lambda x1, x2: np.cos(x1 + x2))
        expected = -np.sin(g64.x1 + g64.x2) / np.sqrt(2.0)
        assert_fields_close(riesz_transform(f), expected)

    def test_riesz_then_sqrt_laplacian_is_d1(self, g64):
        # |D| R f = d1 f, exact as multipliers
        rng = np.random.default_rng(11)
        coeffs = np.zeros((64, 64), dtype=complex)
        for _ in range(30):
            k1, k2 = rng.integers(-10, 11, size=2)
            c = rng.standard_normal() + 1j * rng.standard_normal()
            coeffs[k1 % 64, k2 % 64] += c
            coeffs[-k1 % 64, -k2 % 64] += np.conj(c)
        f = Field(g64, g64.to_values(coeffs))
        lhs = fractional_laplacian(riesz_transform(f), 1.0)
        rhs = partial_derivative(f, 0)
        assert np.abs(lhs.values - rhs.values).max() < 1e-11


class TestDerivatives:
    def test_d1_sin(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x1))
        assert_fields_close(partial_derivative(f, 0), np.cos(g64.x1))

    def test_d2_of_x1_function_is_zero(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x1))
        assert np.abs(partial_derivative(f, 1).values).max() < 1e-12

    def test_d1_cos_3x1(self, g64):
        f = _f(g64, lambda x1, x2: np.cos(3 * x1))
        assert_fields_close(partial_derivative(f, 0), -3 * np.sin(3 * g64.x1))

    def test_gradient_components(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x1) * np.cos(2 * x2))
        g1, g2 = gradient(f)
        assert_fields_close(g1, np.cos(g64.x1) * np.cos(2 * g64.x2))
        assert_fields_close(g2, -2 * np.sin(g64.x1) * np.sin(2 * g64.x2))


class TestBiotSavart:
    def test_sin_x1_vorticity(self, g64):
        v = biot_savart(_f(g64, lambda x1, x2: np.sin(x1)))
        assert np.abs(v.u1.values).max() < 1e-12
        assert_fields_close(v.u2, -np.cos(g64.x1))
        assert v.divergence_free

    def test_zero_vorticity(self, g64):
        v = biot_savart(Field.zeros(g64))
        assert v.max_speed() == 0.0

    def test_cos_x2_vorticity(self, g64):
        v = biot_savart(_f(g64, lambda x1, x2: np.cos(x2)))
        assert_fields_close(v.u1, -np.sin(g64.x2))
        assert np.abs(v.u2.values).max() < 1e-12

    def test_curl_recovers_vorticity(self, g64):
        omega = _f(g64, lambda x1, x2: np.sin(2 * x1) * np.cos(x2)
                   + 0.3 * np.cos(3 * x2))
        v = biot_savart(omega)
        assert np.abs(curl(v).values - omega.values).max() < 1e-11
        assert np.abs(divergence(v).values).max() < 1e-12


class TestLerayProjection:
    def test_idempotent_on_divergence_free(self, g64):
        v = biot_savart(_f(g64, lambda x1, x2: np.sin(x1) + np.cos(2 * x2)))
        pv = leray_project(VectorField(v.u1, v.u2))
        assert np.abs(pv.u1.values - v.u1.values).max() < 1e-12
        assert np.abs(pv.u2.values - v.u2.values).max() < 1e-12

    def test_gradients_in_kernel(self, g64):
        phi1, phi2 = gradient(_f(g64, lambda x1, x2: np.sin(x1) * np.sin(x2)))
        pv = leray_project(VectorField(phi1, phi2))
        assert pv.magnitude().max() < 1e-12

    def test_shear_unchanged(self, g64):
        v = VectorField(_f(g64, lambda x1, x2: np.sin(x2)), Field.zeros(g64))
        pv = leray_project(v)
        assert np.abs(pv.u1.values - v.u1.values).max() < 1e-12
        assert pv.divergence_free


class TestLebesgueNorms:
    def test_constant_l2(self):
        g = Grid(32)
        f = Field(g, np.ones((32, 32)))
        assert lebesgue_norm(f, 2) == pytest.approx(2 * np.pi, rel=1e-12)

    def test_sin_sup(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x1))
        assert lebesgue_norm(f, np.inf) == pytest.approx(1.0, abs=1e-3)

    def test_sin_l2(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x1))
        assert lebesgue_norm(f, 2) == pytest.approx(np.sqrt(2) * np.pi,
                                                    rel=1e-12)

    def test_parseval(self, g64):
        rng = np.random.default_rng(5)
        vals = rng.standard_normal((64, 64))
        f = Field(g64, vals)
        coeffs = g64.to_coeffs(vals)
        spectral = g64.period * np.sqrt((np.abs(coeffs) ** 2).sum())
        assert lebesgue_norm(f, 2) == pytest.approx(spectral, rel=1e-12)

    def test_p_below_one_rejected(self, g64):
        with pytest.raises(ValueError):
            lebesgue_norm(Field.zeros(g64), 0.5)

    def test_vector_norm_uses_euclidean_magnitude(self, g64):
        v = VectorField(_f(g64, lambda x1, x2: np.sin(x1)),
                        _f(g64, lambda x1, x2: np.cos(x1)))
        # |v| = 1 pointwise
        assert vector_lebesgue_norm(v, np.inf) == pytest.approx(1.0,
                                                                rel=1e-12)
        assert gradient_norm(_f(g64, lambda x1, x2: np.sin(x1)), np.inf) \
            == pytest.approx(1.0, abs=1e-3)


class TestDealiasedProducts:
    def test_low_mode_product_unaffected(self, g64):
        f = _f(g64, lambda x1, x2: np.sin(x1))
        h = _f(g64, lambda x1, x2: np.sin(x2))
        prod = dealiased_product(f, h)
        assert_fields_close(prod, np.sin(g64.x1) * np.sin(g64.x2))

    def test_mean_preserved_by_advection(self, g64):
        # div-free advection leaves the mean invariant even after masking
        v = biot_savart(_f(g64, lambda x1, x2: np.sin(x1) * np.sin(2 * x2)))
        theta = _f(g64, lambda x1, x2: np.cos(x1) + np.sin(3 * x2))
        rate = advect(v, theta)
        assert abs(mean_value(rate)) < 1e-14

    def test_high_mode_content_removed(self, g64):
        # square the highest retained mode: product energy would alias
        k = int(g64.dealias_radius) - 1
        f = _f(g64, lambda x1, x2: np.sin(k * x1))
        prod = dealiased_product(f, f)
        coeffs = g64.to_coeffs(prod.values)
        assert np.abs(coeffs[~g64.dealias_mask]).max() < 1e-14

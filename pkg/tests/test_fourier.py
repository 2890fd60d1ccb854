import math
import unittest

import numpy as np

from sine_gordon_lab.errors import ParameterError, PreconditionError, ResolutionError, ShapeError
from sine_gordon_lab.fourier import (
    GridSpec,
    MultiplierSpec,
    SpectralField,
    apply_multiplier,
    chi_profile,
    cutoff_symbol,
    forward_transform,
    hermitian_defect,
    hermitian_part,
    inverse_transform,
    l2_norm_squared,
    lp_block_is_empty,
    lp_kmax,
    lp_project,
    lp_symbol,
    pad_modes,
    poisson_check,
    resample,
    truncate_modes,
)


class TestGridSpec(unittest.TestCase):
    def test_rejects_bad_sizes(self):
        with self.assertRaises(ParameterError):
            GridSpec(1.0, 6)
        with self.assertRaises(ParameterError):
            GridSpec(1.0, 2)
        with self.assertRaises(ParameterError):
            GridSpec(0.0, 16)

    def test_geometry(self):
        grid = GridSpec(2.0, 32)
        self.assertAlmostEqual(grid.spacing, 2.0 * math.pi * 2.0 / 32)
        self.assertAlmostEqual(grid.nyquist, 8.0)
        self.assertAlmostEqual(grid.area, (4.0 * math.pi) ** 2)
        n1, n2 = grid.wavenumbers()
        self.assertAlmostEqual(n1[1, 0], 0.5)
        self.assertAlmostEqual(n2[0, 1], 0.5)
        self.assertEqual(grid.bracket2()[0, 0], 1.0)

    def test_resolution(self):
        grid = GridSpec(1.0, 64)
        grid.require_resolved(16)
        with self.assertRaises(ResolutionError):
            grid.require_resolved(17)


class TestTransforms(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(1.0, 32)
        self.x1, self.x2 = self.grid.points()

    def test_cosine_coefficients(self):
        field = forward_transform(np.cos(self.x1), self.grid)
        # (1/2π)∫cos(x1)e^{-ix1}dx over (2π)² is π
        self.assertAlmostEqual(field.coeffs[1, 0].real, math.pi, places=10)
        self.assertAlmostEqual(field.coeffs[-1, 0].real, math.pi, places=10)
        other = np.abs(field.coeffs).copy()
        other[1, 0] = other[-1, 0] = 0.0
        self.assertLess(other.max(), 1e-10)

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        values = rng.standard_normal((5,) + self.grid.shape)
        field = forward_transform(values, self.grid)
        self.assertTrue(field.is_real)
        np.testing.assert_allclose(inverse_transform(field), values, atol=1e-12)

    def test_complex_round_trip(self):
        rng = np.random.default_rng(4)
        values = rng.standard_normal(self.grid.shape) + 1j * rng.standard_normal(self.grid.shape)
        field = forward_transform(values, self.grid)
        self.assertFalse(field.is_real)
        np.testing.assert_allclose(inverse_transform(field), values, atol=1e-12)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            forward_transform(np.zeros((16, 16)), self.grid)
        with self.assertRaises(ShapeError):
            SpectralField(self.grid, np.zeros((8, 8)))

    def test_parseval(self):
        field = forward_transform(np.cos(self.x1), self.grid)
        self.assertAlmostEqual(float(l2_norm_squared(field)), 2.0 * math.pi**2, places=9)

    def test_oversampled_evaluation(self):
        field = forward_transform(np.sin(2.0 * self.x1) + np.cos(self.x2), self.grid)
        fine = self.grid.refined(2)
        y1, y2 = fine.points()
        np.testing.assert_allclose(inverse_transform(field, oversample=2), np.sin(2.0 * y1) + np.cos(y2), atol=1e-12)

    def test_pad_then_truncate(self):
        rng = np.random.default_rng(5)
        coeffs = rng.standard_normal((3, 16, 16)) + 1j * rng.standard_normal((3, 16, 16))
        np.testing.assert_allclose(truncate_modes(pad_modes(coeffs, 64), 16), coeffs, atol=1e-14)

    def test_pad_refuses_shrinking(self):
        with self.assertRaises(ShapeError):
            pad_modes(np.zeros((16, 16)), 8)
        with self.assertRaises(ShapeError):
            truncate_modes(np.zeros((8, 8)), 16)

    def test_resample_keeps_values(self):
        field = forward_transform(np.cos(3.0 * self.x1 + self.x2), self.grid)
        fine = resample(field, self.grid.refined(2))
        back = resample(fine, self.grid)
        np.testing.assert_allclose(back.coeffs, field.coeffs, atol=1e-12)

    def test_hermitian_part_is_exact(self):
        rng = np.random.default_rng(6)
        coeffs = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        field = SpectralField(GridSpec(1.0, 16), hermitian_part(coeffs))
        self.assertEqual(hermitian_defect(field), 0.0)

    def test_conjugate(self):
        values = np.exp(1j * (self.x1 + 2.0 * self.x2))
        field = forward_transform(values, self.grid)
        np.testing.assert_allclose(inverse_transform(field.conjugate()), np.conj(values), atol=1e-12)


class TestMultipliers(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(1.0, 64)

    def test_chi_profiles(self):
        self.assertEqual(float(chi_profile(0.5)), 1.0)
        self.assertEqual(float(chi_profile(2.0)), 0.0)
        self.assertEqual(float(chi_profile(1.0, "sharp")), 1.0)
        self.assertEqual(float(chi_profile(1.01, "sharp")), 0.0)
        with self.assertRaises(ParameterError):
            chi_profile(1.0, "boxcar")

    def test_cutoff_symbol_support(self):
        symbol = cutoff_symbol(self.grid, 8)
        norm = np.sqrt(self.grid.mode_norm2())
        self.assertTrue(np.all(symbol[norm <= 4.0] == 1.0))
        self.assertTrue(np.all(symbol[norm >= 16.0] == 0.0))

    def test_callable_profile(self):
        symbol = cutoff_symbol(self.grid, 4, profile=lambda z: np.where(z < 1.0, 1.0, 0.0))
        self.assertEqual(symbol[0, 0], 1.0)
        self.assertEqual(symbol[5, 0], 0.0)

    def test_cutoff_below_one(self):
        with self.assertRaises(ParameterError):
            MultiplierSpec.smooth_cutoff(0.5)

    def test_heat_semigroup(self):
        x1, _ = self.grid.points()
        field = forward_transform(np.cos(x1), self.grid)
        smoothed = apply_multiplier(field, MultiplierSpec.heat_semigroup(0.5))
        np.testing.assert_allclose(inverse_transform(smoothed), math.exp(-1.0) * np.cos(x1), atol=1e-12)

    def test_wave_symbols_at_zero_time(self):
        self.assertTrue(np.all(MultiplierSpec.wave_D(0.0).symbol(self.grid) == 0.0))
        self.assertTrue(np.all(MultiplierSpec.wave_Ddot(0.0).symbol(self.grid) == 1.0))

    def test_blocks_form_partition_of_unity(self):
        total = sum(lp_symbol(self.grid, k) for k in range(lp_kmax(self.grid) + 1))
        np.testing.assert_allclose(total, 1.0, atol=1e-14)

    def test_empty_block_projects_to_zero(self):
        k = lp_kmax(self.grid) + 2
        self.assertTrue(lp_block_is_empty(self.grid, k))
        field = SpectralField(self.grid, np.ones(self.grid.shape))
        self.assertTrue(np.all(lp_project(field, k).coeffs == 0.0))
        with self.assertRaises(ParameterError):
            lp_project(field, -1)


class TestPoissonCheck(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(1.0, 64)

    def gaussian(self, x1, x2):
        return np.exp(-(x1**2 + x2**2) / 2.0)

    def test_closed_form_transform(self):
        residual = poisson_check(self.gaussian, self.grid, lambda n1, n2: np.exp(-(n1**2 + n2**2) / 2.0))
        self.assertLess(residual, 1e-10)

    def test_quadrature_transform(self):
        self.assertLess(poisson_check(self.gaussian, self.grid), 1e-10)

    def narrow(self, x1, x2):
        return np.exp(-20.0 * (x1**2 + x2**2))

    def narrow_hat(self, n1, n2):
        return np.exp(-(n1**2 + n2**2) / 80.0) / 40.0

    def test_quadrature_rejects_unresolved_transform(self):
        # F̂ is still 1e-2 at the Nyquist rim of a 16-point grid
        grid = GridSpec(1.0, 16)
        with self.assertRaises(PreconditionError):
            poisson_check(self.narrow, grid)
        aliased = poisson_check(self.narrow, grid, tol=1.0, refine=4)
        self.assertGreater(aliased, 0.1)
        self.assertAlmostEqual(aliased, poisson_check(self.narrow, grid, self.narrow_hat, tol=1.0), delta=1e-8)

    def test_slow_decay_rejected(self):
        with self.assertRaises(PreconditionError):
            poisson_check(lambda x1, x2: np.ones_like(x1), self.grid)
        with self.assertRaises(PreconditionError):
            poisson_check(self.gaussian, self.grid, window=2)


if __name__ == "__main__":
    unittest.main()

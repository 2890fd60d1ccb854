import math
import unittest

import numpy as np

from sine_gordon_lab.errors import GridMismatchError, ParameterError
from sine_gordon_lab.fourier import GridSpec, SpectralField, hermitian_defect
from sine_gordon_lab.noise import (
    SeededStream,
    coarsen_slabs,
    evolve_heat_convolution,
    heat_factors,
    sample_gff,
    sample_white_noise_slab,
    unit_gaussian_coeffs,
    white_noise_pairing,
)


class TestSeededStream(unittest.TestCase):
    def test_same_key_same_draws(self):
        a = SeededStream(7, "exp", member=3, slab=2).generator().standard_normal(5)
        b = SeededStream(7, "exp", member=3, slab=2).generator().standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_distinct_keys_distinct_draws(self):
        base = SeededStream(7, "exp")
        draws = [
            base.generator().standard_normal(4),
            base.for_member(1).generator().standard_normal(4),
            base.for_slab(1).generator().standard_normal(4),
            base.for_experiment("other").generator().standard_normal(4),
            SeededStream(8, "exp").generator().standard_normal(4),
        ]
        for i in range(len(draws)):
            for j in range(i + 1, len(draws)):
                self.assertFalse(np.array_equal(draws[i], draws[j]))

    def test_derived_streams_reset_indices(self):
        stream = SeededStream(1, "exp", member=2, slab=5)
        self.assertEqual(stream.for_member(4).slab, 0)
        self.assertEqual(stream.for_experiment("x").stream_id, ("x", 0, 0))

    def test_rejects_bad_seed(self):
        with self.assertRaises(ParameterError):
            SeededStream(-1)
        with self.assertRaises(ParameterError):
            SeededStream(2**64)
        with self.assertRaises(ParameterError):
            SeededStream(0, member=-1)


class TestFreeField(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(1.0, 16)
        self.stream = SeededStream(11, "gff")

    def test_unit_coefficients(self):
        w = unit_gaussian_coeffs(self.grid, np.random.default_rng(0), (4000,))
        self.assertAlmostEqual(float(np.mean(np.abs(w) ** 2)), 1.0, delta=0.02)

    def test_gff_is_real_and_batched(self):
        u = sample_gff(self.grid, self.stream, (3,))
        self.assertEqual(u.batch_shape, (3,))
        self.assertTrue(u.is_real)
        self.assertEqual(hermitian_defect(u), 0.0)

    def test_gff_mode_variance(self):
        u = sample_gff(self.grid, self.stream, (4000,))
        ratio = np.abs(u.coeffs) ** 2 * self.grid.bracket2() / self.grid.L**2
        self.assertAlmostEqual(float(np.mean(ratio)), 1.0, delta=0.05)

    def test_gff_reproducible(self):
        a = sample_gff(self.grid, self.stream, (2,))
        b = sample_gff(self.grid, self.stream, (2,))
        np.testing.assert_array_equal(a.coeffs, b.coeffs)


class TestWhiteNoise(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(2.0, 16)
        self.stream = SeededStream(5, "noise")

    def test_heat_factors_at_zero(self):
        decay, duhamel = heat_factors(self.grid, 0.0)
        self.assertTrue(np.all(decay == 1.0))
        self.assertTrue(np.all(duhamel == 0.0))

    def test_rejects_bad_dt(self):
        with self.assertRaises(ParameterError):
            sample_white_noise_slab(self.grid, 0.0, self.stream)
        with self.assertRaises(ParameterError):
            coarsen_slabs([])

    def test_increment_and_integral_variance(self):
        dt = 0.3
        slab = sample_white_noise_slab(self.grid, dt, self.stream, (4000,))
        L2 = self.grid.L**2
        self.assertAlmostEqual(float(np.mean(np.abs(slab.increments) ** 2)) / (L2 * dt), 1.0, delta=0.05)
        rate = self.grid.bracket2()
        expected = -np.expm1(-2.0 * dt * rate) / (2.0 * rate)
        ratio = np.abs(slab.heat_integral) ** 2 / (L2 * expected)
        self.assertAlmostEqual(float(np.mean(ratio)), 1.0, delta=0.05)

    def test_coarsening_composes(self):
        slabs = [sample_white_noise_slab(self.grid, 0.1, self.stream.for_slab(j), (2,)) for j in range(3)]
        merged = coarsen_slabs(slabs)
        self.assertAlmostEqual(merged.dt, 0.3)
        np.testing.assert_allclose(merged.increments, sum(s.increments for s in slabs), atol=1e-14)
        decay = np.exp(-0.1 * self.grid.bracket2())
        expected = decay**2 * slabs[0].heat_integral + decay * slabs[1].heat_integral + slabs[2].heat_integral
        np.testing.assert_allclose(merged.heat_integral, expected, atol=1e-13)

    def test_coarse_step_matches_fine_steps(self):
        psi = sample_gff(self.grid, self.stream.for_experiment("start"), (2,))
        slabs = [sample_white_noise_slab(self.grid, 0.05, self.stream.for_slab(j), (2,)) for j in range(4)]
        fine = psi
        for slab in slabs:
            fine = evolve_heat_convolution(fine, slab)
        coarse = evolve_heat_convolution(psi, coarsen_slabs(slabs))
        np.testing.assert_allclose(coarse.coeffs, fine.coeffs, atol=1e-12)

    def test_pairing_with_constant(self):
        dt = 0.5
        slab = sample_white_noise_slab(self.grid, dt, self.stream, (4000,))
        one = SpectralField(self.grid, np.zeros(self.grid.shape))
        coeffs = np.zeros(self.grid.shape)
        coeffs[0, 0] = 2.0 * math.pi * self.grid.L**2
        one = one.with_coeffs(coeffs)
        pairing = white_noise_pairing(slab, one)
        self.assertAlmostEqual(float(np.var(pairing)) / (dt * self.grid.area), 1.0, delta=0.08)

    def test_grid_mismatch(self):
        slab = sample_white_noise_slab(self.grid, 0.1, self.stream)
        with self.assertRaises(GridMismatchError):
            evolve_heat_convolution(SpectralField.zeros(GridSpec(1.0, 16)), slab)

    def test_ou_step_preserves_free_field(self):
        psi = sample_gff(self.grid, self.stream.for_experiment("start"), (4000,))
        slab = sample_white_noise_slab(self.grid, 0.5, self.stream, (4000,))
        evolved = evolve_heat_convolution(psi, slab)
        ratio = np.abs(evolved.coeffs) ** 2 * self.grid.bracket2() / self.grid.L**2
        self.assertAlmostEqual(float(np.mean(ratio)), 1.0, delta=0.05)


if __name__ == "__main__":
    unittest.main()

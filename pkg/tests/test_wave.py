import math
import unittest

import numpy as np
import pytest
from scipy import integrate

from sine_gordon_lab import renorm
from sine_gordon_lab.errors import ParameterError
from sine_gordon_lab.fourier import GridSpec, SpectralField, cutoff_symbol, forward_transform, inverse_transform
from sine_gordon_lab.noise import SeededStream, sample_gff
from sine_gordon_lab.parabolic import DynamicsConfig, Placement
from sine_gordon_lab.trajectory import TrajectoryRecord
from sine_gordon_lab.wave import (
    WaveState,
    evolve_wave_convolution,
    sample_wave_noise_slab,
    simulate_wave_remainder,
    step_truncated_wave,
    step_wave_remainder,
    wave_energy,
    wave_energy_monitor,
    wave_frequency,
    wave_linear_step,
    wave_noise_gram,
    wave_propagator,
    wave_state,
)


class TestPropagator(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(1.0, 16)

    def test_identity_at_zero_time(self):
        prop = wave_propagator(self.grid, 0.0)
        np.testing.assert_allclose(prop.uu, 1.0)
        np.testing.assert_allclose(prop.vv, 1.0)
        np.testing.assert_allclose(prop.uv, 0.0)
        np.testing.assert_allclose(prop.vu, 0.0)
        np.testing.assert_allclose(prop.force_u, 0.0, atol=1e-15)
        with self.assertRaises(ParameterError):
            wave_propagator(self.grid, -0.1)

    def test_forcing_response_identities(self):
        prop = wave_propagator(self.grid, 0.3)
        bracket2 = self.grid.bracket2()
        np.testing.assert_allclose(prop.force_u, (1.0 - prop.uu) / bracket2, atol=1e-14)
        np.testing.assert_allclose(prop.vu, -bracket2 * prop.uv)
        np.testing.assert_allclose(prop.force_v, prop.uv)

    def test_semigroup(self):
        half = wave_propagator(self.grid, 0.35)
        whole = wave_propagator(self.grid, 0.7)
        np.testing.assert_allclose(half.uu * half.uu + half.uv * half.vu, whole.uu, atol=1e-13)
        np.testing.assert_allclose(half.vu * half.uu + half.vv * half.vu, whole.vu, atol=1e-12)

    def test_single_mode_closed_form(self):
        x1, _ = self.grid.points()
        position = forward_transform(np.cos(x1), self.grid)
        state = wave_state(position, None, math.pi, 4)
        for _ in range(10):
            state = wave_linear_step(state, 0.1)
        w = math.sqrt(1.75)
        t = state.t
        exact = math.exp(-0.5 * t) * (math.cos(w * t) + math.sin(w * t) / (2.0 * w))
        np.testing.assert_allclose(inverse_transform(state.position), exact * np.cos(x1), atol=1e-12)
        velocity = -math.exp(-0.5 * t) * 2.0 * math.sin(w * t) / w
        np.testing.assert_allclose(inverse_transform(state.velocity), velocity * np.cos(x1), atol=1e-12)

    def test_zero_state_stays_zero(self):
        state = wave_state(SpectralField.zeros(self.grid), None, math.pi, 4)
        stepped = wave_linear_step(state, 0.5)
        self.assertTrue(np.all(stepped.position.coeffs == 0.0))
        self.assertTrue(np.all(stepped.velocity.coeffs == 0.0))
        with self.assertRaises(ParameterError):
            wave_linear_step(state, 0.0)


class TestWaveNoise(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(1.0, 16)

    def test_gram_matrix_is_positive(self):
        for h in (0.01, 0.1, 1.0):
            dd, dv, vv = wave_noise_gram(self.grid, h)
            self.assertTrue(np.all(dd > 0.0))
            self.assertTrue(np.all(vv > 0.0))
            self.assertTrue(np.all(dd * vv - dv * dv >= -1e-15))

    def test_gram_matches_quadrature(self):
        h = 0.7
        dd, dv, vv = wave_noise_gram(self.grid, h)
        w = float(wave_frequency(self.grid)[1, 0])

        def D(t):
            return math.exp(-0.5 * t) * math.sin(w * t) / w

        def Ddot(t):
            return math.exp(-0.5 * t) * (math.cos(w * t) - math.sin(w * t) / (2.0 * w))

        self.assertAlmostEqual(dd[1, 0], integrate.quad(lambda t: D(t) ** 2, 0.0, h)[0], places=12)
        self.assertAlmostEqual(dv[1, 0], integrate.quad(lambda t: D(t) * Ddot(t), 0.0, h)[0], places=12)
        self.assertAlmostEqual(vv[1, 0], integrate.quad(lambda t: Ddot(t) ** 2, 0.0, h)[0], places=12)

    def test_slab_shapes_and_reproducibility(self):
        stream = SeededStream(1, "wave")
        a = sample_wave_noise_slab(self.grid, 0.1, stream, (3,))
        b = sample_wave_noise_slab(self.grid, 0.1, stream, (3,))
        self.assertEqual(a.position.shape, (3, 16, 16))
        np.testing.assert_array_equal(a.velocity, b.velocity)
        with self.assertRaises(ParameterError):
            sample_wave_noise_slab(self.grid, 0.0, stream)

    def test_noise_placement_truncates_the_noise(self):
        stream = SeededStream(2, "wave")
        state = wave_state(SpectralField.zeros(self.grid, (2,)), None, math.pi, 2)
        slab = sample_wave_noise_slab(self.grid, 0.1, stream, (2,))
        stepped = evolve_wave_convolution(state, slab)
        outside = cutoff_symbol(self.grid, 2) == 0.0
        self.assertTrue(np.all(stepped.position.coeffs[..., outside] == 0.0))


class TestWaveDynamics(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(1.0, 16)
        self.stream = SeededStream(4, "wave-dynamics")

    def test_state_needs_real_fields(self):
        complex_field = SpectralField(self.grid, np.zeros(self.grid.shape), is_real=False)
        with self.assertRaises(ParameterError):
            WaveState(0.0, complex_field, SpectralField.zeros(self.grid), math.pi, 4)

    def test_truncated_step_checks_limit(self):
        state = wave_state(SpectralField.zeros(self.grid), None, math.pi, 4)
        slab = sample_wave_noise_slab(self.grid, 0.05, self.stream)
        with self.assertRaises(ParameterError):
            step_truncated_wave(state, 0.05, slab, dt_max=0.01)
        # without dt_max the parabolic default of 1e-2 applies
        with self.assertRaises(ParameterError):
            step_truncated_wave(state, 0.05, slab)
        stepped = step_truncated_wave(state, 0.05, slab, dt_max=0.05)
        self.assertAlmostEqual(stepped.t, 0.05)

    def test_truncated_step_at_zero_time_has_unit_gamma(self):
        # γ^wave(0) = 1 and the constant state u = 0.5 feels -sin(0.5)
        coeffs = np.zeros(self.grid.shape)
        coeffs[0, 0] = 2.0 * math.pi * 0.5
        position = SpectralField(self.grid, coeffs)
        state = wave_state(position, None, 1.0, 4)
        slab = sample_wave_noise_slab(self.grid, 0.01, self.stream)
        zero_slab = type(slab)(self.grid, 0.01, np.zeros_like(slab.position), np.zeros_like(slab.velocity))
        stepped = step_truncated_wave(state, 0.01, zero_slab)
        prop = wave_propagator(self.grid, 0.01)
        expected = prop.uu[0, 0] * 0.5 + prop.force_u[0, 0] * (-math.sin(0.5))
        np.testing.assert_allclose(inverse_transform(stepped.position), expected, atol=1e-12)

    def test_real_constant_chaos_is_a_fixed_point(self):
        state = wave_state(SpectralField.zeros(self.grid), None, math.pi, 4)
        fine = self.grid.refined(2)
        coeffs = np.zeros(fine.shape, dtype=complex)
        coeffs[0, 0] = 2.0 * math.pi * 0.8
        theta = SpectralField(fine, coeffs, is_real=False)
        for _ in range(4):
            state = step_wave_remainder(state, theta, theta.conjugate(), 0.01)
        self.assertTrue(np.all(state.position.coeffs == 0.0))
        self.assertTrue(np.all(state.velocity.coeffs == 0.0))

    def test_linear_remainder_run(self):
        position = sample_gff(self.grid, self.stream, (2,))
        times = [0.0, 0.1, 0.3]
        run = simulate_wave_remainder(position, None, math.pi, 4, times, self.stream, theta_scale=0.0)
        self.assertEqual(len(run.v), 3)
        np.testing.assert_array_equal(run.v.at(0).coeffs, position.coeffs)
        prop = wave_propagator(self.grid, 0.3)
        np.testing.assert_allclose(run.v.at(2).coeffs, prop.uu * position.coeffs, rtol=1e-10, atol=1e-14)

    def test_zero_data_run_is_finite(self):
        zero = SpectralField.zeros(self.grid, (2,))
        run = simulate_wave_remainder(zero, None, math.pi, 4, [0.0, 0.05, 0.1], self.stream)
        self.assertTrue(np.all(np.isfinite(run.v.fields.coeffs)))
        self.assertEqual(run.theta.fields.grid.n_side, 32)
        self.assertEqual(run.v.integrator["placement"], "noise")
        np.testing.assert_allclose(np.abs(inverse_transform(run.theta.at(0))), 1.0, atol=1e-12)


class TestEnergyMonitor(unittest.TestCase):
    def setUp(self):
        self.grid = GridSpec(1.0, 16)
        self.stream = SeededStream(6, "energy")

    def test_alpha_range(self):
        zero = SpectralField.zeros(self.grid, (1,))
        record = TrajectoryRecord(np.array([0.0]), zero, zero)
        for alpha in (0.0, 0.5, 0.7):
            with self.assertRaises(ParameterError):
                wave_energy_monitor(record, alpha, 1.0)

    def test_needs_velocities(self):
        zero = SpectralField.zeros(self.grid, (1,))
        with self.assertRaises(ParameterError):
            wave_energy_monitor(TrajectoryRecord(np.array([0.0]), zero), 0.3, 1.0)

    def test_linear_energy_envelope(self):
        position = sample_gff(self.grid, self.stream, (3,))
        velocity = sample_gff(self.grid, self.stream.for_member(1), (3,))
        times = np.linspace(0.0, 2.0, 21)
        run = simulate_wave_remainder(position, velocity, math.pi, 4, times, self.stream, theta_scale=0.0)
        report = wave_energy_monitor(run.v, 0.3, 2.0)
        np.testing.assert_allclose(report.data_term, wave_energy(position, velocity, 0.3))
        self.assertTrue(np.all(report.sup <= math.sqrt(2.0) * report.data_term * (1.0 + 1e-10)))
        self.assertEqual(report.energy.shape, (21, 3))
        self.assertIsNone(report.forcing_term)

    def test_forcing_term(self):
        zero = SpectralField.zeros(self.grid, (2,))
        run = simulate_wave_remainder(zero, None, math.pi, 4, [0.0, 0.05, 0.1], self.stream)
        with self.assertRaises(ParameterError):
            wave_energy_monitor(run.v, 0.3, 0.1, run.theta)
        report = wave_energy_monitor(run.v, 0.3, 0.1, run.theta, math.pi)
        self.assertEqual(report.forcing_term.shape, (3, 2))
        self.assertTrue(np.all(report.forcing_term[0] == 0.0))
        self.assertTrue(np.all(np.diff(report.forcing_term, axis=0) >= 0.0))
        self.assertIn("forcing_term", report.as_dict())


class TestWaveConvolution(unittest.TestCase):
    @pytest.mark.slow
    def test_variance_matches_sigma_wave(self):
        grid = GridSpec(1.0, 16)
        stream = SeededStream(12, "wave-variance")
        members = 2000
        config = DynamicsConfig(placement=Placement.NOISE)
        psi = wave_state(SpectralField.zeros(grid, (members,)), None, math.pi, 2, config)
        for j in range(10):
            psi = evolve_wave_convolution(psi, sample_wave_noise_slab(grid, 0.1, stream.for_slab(j), (members,)))
        variance = float(np.mean(inverse_transform(psi.position) ** 2))
        self.assertAlmostEqual(variance / renorm.sigma_wave(grid, 2, psi.t), 1.0, delta=0.05)


if __name__ == "__main__":
    unittest.main()

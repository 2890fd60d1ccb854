import math

import numpy as np
import pytest
from scipy import integrate

from sine_gordon_lab.errors import ParameterError, RenormOverflowError, ResolutionError
from sine_gordon_lab.fourier import GridSpec
from sine_gordon_lab.renorm import (
    _wave_variance_weights,
    gamma,
    gamma_wave,
    renorm_table,
    sigma_heat,
    sigma_wave,
    sigma_wave_split,
)


@pytest.fixture
def grid():
    return GridSpec(1.0, 64)


def test_sigma_heat_increases_with_cutoff(grid):
    values = [sigma_heat(grid, N) for N in (2, 4, 8, 16)]
    assert all(b > a > 0.0 for a, b in zip(values, values[1:]))


def test_sigma_heat_needs_resolution(grid):
    with pytest.raises(ResolutionError):
        sigma_heat(grid, 17)


def test_sigma_heat_sharp_cutoff_is_a_lattice_sum(grid):
    norm2 = grid.mode_norm2()
    expected = np.sum(np.where(norm2 <= 16.0, 1.0 / (1.0 + norm2), 0.0)) / (4.0 * math.pi**2)
    assert sigma_heat(grid, 4, "sharp") == pytest.approx(expected, rel=1e-12)


def test_log_slope_approaches_one_over_two_pi():
    table = renorm_table(GridSpec(1.0, 256), [8, 16, 32, 64], beta2=math.pi)
    assert table.log_fit().slope == pytest.approx(0.5 / math.pi, rel=0.1)
    frame = table.to_frame()
    assert list(frame.columns) == ["N", "sigma", "gamma"]
    assert len(frame) == 4
    assert table.metadata()["chi_profile"] == "smooth"


def test_gamma_normalises_the_chaos():
    assert gamma(math.pi, 0.0) == 1.0
    assert math.log(gamma(2.0, 0.7)) == pytest.approx(0.7)


@pytest.mark.parametrize("beta2, sigma", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.1)])
def test_gamma_rejects_bad_arguments(beta2, sigma):
    with pytest.raises(ParameterError):
        gamma(beta2, sigma)


def test_gamma_overflow():
    with pytest.raises(RenormOverflowError):
        gamma(2.0, 701.0)


def test_wave_weights_match_quadrature():
    grid = GridSpec(1.0, 8)
    t = 0.7
    weights = _wave_variance_weights(grid, t)
    for norm2, value in ((0.0, weights[0, 0]), (1.0, weights[1, 0]), (2.0, weights[1, 1])):
        w = math.sqrt(0.75 + norm2)
        expected, _ = integrate.quad(lambda s: math.exp(-s) * math.sin(s * w) ** 2 / w**2, 0.0, t)
        assert value == pytest.approx(expected, rel=1e-10)


def test_sigma_wave_limits(grid):
    assert sigma_wave(grid, 8, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert sigma_wave(grid, 8, 40.0) == pytest.approx(sigma_heat(grid, 8), rel=1e-10)
    with pytest.raises(ParameterError):
        sigma_wave(grid, 8, -1.0)


def test_sigma_wave_split_sums_up(grid):
    leading, rest = sigma_wave_split(grid, 8, 0.5)
    assert leading + rest == pytest.approx(sigma_wave(grid, 8, 0.5), rel=1e-12)
    assert leading == pytest.approx(-math.expm1(-0.5) * sigma_heat(grid, 8))


def test_gamma_wave_grows_with_time(grid):
    assert gamma_wave(math.pi, grid, 8, 0.0) == pytest.approx(1.0)
    assert gamma_wave(math.pi, grid, 8, 2.0) > gamma_wave(math.pi, grid, 8, 1.0)

"""Sine-Gordon Lab - spectral simulation of the stochastic sine-Gordon model on the torus.

This package samples the free field and its imaginary multiplicative chaos,
integrates the frequency-truncated parabolic and damped-wave sine-Gordon
dynamics, samples the truncated Gibbs measure and estimates the norms and
scaling laws that control all of them.

Main Features:
    - Grid-independent Fourier conventions and Littlewood-Paley blocks
    - Counter-based reproducible noise streams for ensembles
    - Exact renormalisation constants for heat and wave flows
    - Exponential integrators with exact linear flow and exact noise
    - pCN sampling of the Gibbs measure and invariance tests
    - A command line runner writing self-describing artifact directories

Example:
    from sine_gordon_lab import GridSpec, SeededStream, sample_gff, sigma_heat

    grid = GridSpec(L=1.0, n_side=64)
    sigma = sigma_heat(grid, N=16)
    u = sample_gff(grid, SeededStream(master_seed=1), batch_shape=(100,))
"""

from sine_gordon_lab._version import __version__
from sine_gordon_lab.chaos import ChaosField, build_theta
from sine_gordon_lab.fourier import GridSpec, SpectralField, forward_transform, inverse_transform
from sine_gordon_lab.noise import SeededStream, sample_gff, sample_white_noise_slab
from sine_gordon_lab.renorm import gamma, sigma_heat, sigma_wave

__all__ = [
    "ChaosField",
    "GridSpec",
    "SeededStream",
    "SpectralField",
    "build_theta",
    "forward_transform",
    "gamma",
    "inverse_transform",
    "sample_gff",
    "sample_white_noise_slab",
    "sigma_heat",
    "sigma_wave",
    "__version__",
]

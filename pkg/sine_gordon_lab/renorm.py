"""Renormalisation constants for the heat and damped-wave flows.

σ_{L,N} is always the exact finite lattice sum, never its logarithmic
asymptotic, so that the chaos normalisation E[γe^{iβΨ_N}] = 1 holds exactly.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
import pandas as pd

from sine_gordon_lab.errors import ParameterError, RenormOverflowError
from sine_gordon_lab.fourier import ChiProfile, GridSpec, cutoff_symbol
from sine_gordon_lab.stats import LinearFit, linear_fit

logger = logging.getLogger(__name__)

MAX_LOG_GAMMA = 700.0


def _profile_id(chi: ChiProfile) -> str:
    return chi if isinstance(chi, str) else getattr(chi, "__name__", "custom")


def sigma_heat(grid: GridSpec, N: float, chi: ChiProfile = "smooth") -> float:
    """Variance of Π_N u(x) under μ_L.

    Computes (1/4π²L²)·Σ_n χ_N(n)²/⟨n⟩² over the represented modes.

    Raises:
        ResolutionError: If 2N exceeds the grid's Nyquist magnitude.
    """
    grid.require_resolved(N)
    symbol = cutoff_symbol(grid, N, chi)
    return float(np.sum(symbol**2 / grid.bracket2()) / (4.0 * math.pi**2 * grid.L**2))


def gamma(beta2: float, sigma: float) -> float:
    """γ = e^{β²σ/2}.

    Raises:
        ParameterError: For β² <= 0 or σ < 0.
        RenormOverflowError: If the exponent exceeds 700.
    """
    if not beta2 > 0.0:
        raise ParameterError(f"beta2 must be positive, got {beta2}")
    if not sigma >= 0.0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    exponent = 0.5 * beta2 * sigma
    if exponent > MAX_LOG_GAMMA:
        raise RenormOverflowError(f"log gamma = {exponent:g} exceeds {MAX_LOG_GAMMA}")
    return math.exp(exponent)


def _wave_variance_weights(grid: GridSpec, t: float) -> np.ndarray:
    """Per-mode ∫_0^t e^{-τ} sin²(τ⟨⟨n⟩⟩) dτ / ⟨⟨n⟩⟩² in closed form."""
    if not (math.isfinite(t) and t >= 0.0):
        raise ParameterError(f"t must be >= 0, got {t}")
    w2 = 0.75 + grid.mode_norm2()
    w = np.sqrt(w2)
    damping = math.exp(-t)
    oscillation = 1.0 + damping * (2.0 * w * np.sin(2.0 * w * t) - np.cos(2.0 * w * t))
    integral = 0.5 * (-math.expm1(-t)) - 0.5 * oscillation / (1.0 + 4.0 * w2)
    return integral / w2


def sigma_wave(grid: GridSpec, N: float, t: float, chi: ChiProfile = "smooth") -> float:
    """Variance of Ψ^wave_N(t, x) started from zero data at time 0.

    Equals (1/2π²L²)·Σ χ_N²/⟨⟨n⟩⟩²·∫_0^t e^{-(t-s)}sin²((t-s)⟨⟨n⟩⟩) ds with the
    time integral in closed form; tends to :func:`sigma_heat` as t grows.
    """
    grid.require_resolved(N)
    symbol = cutoff_symbol(grid, N, chi)
    weights = _wave_variance_weights(grid, t)
    return float(np.sum(symbol**2 * weights) / (2.0 * math.pi**2 * grid.L**2))


def sigma_wave_split(
    grid: GridSpec, N: float, t: float, chi: ChiProfile = "smooth"
) -> Tuple[float, float]:
    """Split σ^wave(t) into the leading (1-e^{-t})σ_heat term and the bounded rest G_N(t)."""
    leading = -math.expm1(-t) * sigma_heat(grid, N, chi)
    return leading, sigma_wave(grid, N, t, chi) - leading


def gamma_wave(beta2: float, grid: GridSpec, N: float, t: float, chi: ChiProfile = "smooth") -> float:
    return gamma(beta2, sigma_wave(grid, N, t, chi))


@dataclass(frozen=True)
class RenormEntry:
    N: float
    sigma: float
    gamma: float


@dataclass(frozen=True)
class RenormTable:
    """σ_{L,N} and γ_{L,N} for a list of cutoffs on one grid."""

    grid: GridSpec
    beta2: float
    profile: str
    entries: Tuple[RenormEntry, ...]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "N": [e.N for e in self.entries],
                "sigma": [e.sigma for e in self.entries],
                "gamma": [e.gamma for e in self.entries],
            }
        )

    def log_fit(self) -> LinearFit:
        """Least-squares fit of σ against log N; the slope should approach 1/2π."""
        return linear_fit(np.log([e.N for e in self.entries]), [e.sigma for e in self.entries])

    def metadata(self) -> dict:
        return {
            "L": self.grid.L,
            "n_side": self.grid.n_side,
            "beta2": self.beta2,
            "chi_profile": self.profile,
        }


def renorm_table(
    grid: GridSpec, N_list: Iterable[float], beta2: float, chi: ChiProfile = "smooth"
) -> RenormTable:
    entries = []
    for N in N_list:
        sigma = sigma_heat(grid, N, chi)
        entries.append(RenormEntry(N=N, sigma=sigma, gamma=gamma(beta2, sigma)))
        logger.debug(f"N={N}: sigma={sigma:.6f}")
    return RenormTable(grid=grid, beta2=beta2, profile=_profile_id(chi), entries=tuple(entries))

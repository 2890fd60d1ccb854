"""Seeded Gaussian sampling: free field, white-noise slabs, stochastic convolution.

Randomness is drawn from counter-based Philox streams keyed by
``(master_seed, experiment, member, slab)`` so that every ensemble member and
every time slab owns an independent, reproducible substream regardless of the
order in which they are evaluated.

White noise is generated mode by mode. A :class:`NoiseSlab` carries, for each
mode n, the Brownian increment ΔŴ_n over the slab together with the exact
Ornstein-Uhlenbeck integral ∫ e^{-⟨n⟩²(dt-s)} dŴ_n(s), sampled jointly. Both
compose exactly when consecutive slabs are merged (:func:`coarsen_slabs`), which
gives the coupled construction used for refinement studies.
"""

import hashlib
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from sine_gordon_lab.errors import ParameterError
from sine_gordon_lab.fourier import GridSpec, SpectralField, hermitian_part

logger = logging.getLogger(__name__)

_SEED_LIMIT = 2**64


def _experiment_key(experiment: str) -> int:
    digest = hashlib.sha256(experiment.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass(frozen=True)
class SeededStream:
    """Identity of an independent random substream.

    Attributes:
        master_seed: Unsigned 64-bit run seed.
        experiment: Experiment label, hashed into the stream key.
        member: Ensemble member index.
        slab: Time-slab (or chunk) index.
    """

    master_seed: int
    experiment: str = "default"
    member: int = 0
    slab: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < _SEED_LIMIT:
            raise ParameterError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.member < 0 or self.slab < 0:
            raise ParameterError(f"stream indices must be >= 0, got ({self.member}, {self.slab})")

    @property
    def stream_id(self) -> Tuple[str, int, int]:
        return (self.experiment, self.member, self.slab)

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(
            self.master_seed,
            spawn_key=(_experiment_key(self.experiment), self.member, self.slab),
        )
        return np.random.Generator(np.random.Philox(sequence))

    def for_member(self, member: int) -> "SeededStream":
        return replace(self, member=member, slab=0)

    def for_slab(self, slab: int) -> "SeededStream":
        return replace(self, slab=slab)

    def for_experiment(self, experiment: str) -> "SeededStream":
        return replace(self, experiment=experiment, member=0, slab=0)

    def as_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "experiment": self.experiment,
            "member": self.member,
            "slab": self.slab,
        }


def unit_gaussian_coeffs(
    grid: GridSpec, rng: np.random.Generator, batch_shape: Tuple[int, ...] = ()
) -> np.ndarray:
    """Hermitian array of centred Gaussians with E|w(n)|² = 1 on every mode."""
    real_noise = rng.standard_normal(batch_shape + grid.shape)
    coeffs = np.fft.fft2(real_noise, axes=(-2, -1)) / grid.n_side
    return hermitian_part(coeffs)


def sample_gff(
    grid: GridSpec, stream: SeededStream, batch_shape: Tuple[int, ...] = ()
) -> SpectralField:
    """Sample the massive free field μ_L (covariance (1-Δ)^{-1}).

    Coefficients satisfy E|û(n)|² = L²/⟨n⟩², which makes
    Var⟨u, φ⟩ = ⟨(1-Δ)^{-1}φ, φ⟩ for every real test function φ.
    """
    w = unit_gaussian_coeffs(grid, stream.generator(), batch_shape)
    return SpectralField(grid, grid.L * w / np.sqrt(grid.bracket2()), is_real=True)


def heat_factors(grid: GridSpec, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-mode e^{-dt⟨n⟩²} and the integrating factor (1-e^{-dt⟨n⟩²})/⟨n⟩²."""
    rate = grid.bracket2()
    decay = np.exp(-dt * rate)
    return decay, -np.expm1(-dt * rate) / rate


@dataclass(frozen=True)
class NoiseSlab:
    """Space-time white noise restricted to one time slab of length ``dt``.

    Attributes:
        grid: Spatial grid.
        dt: Slab duration.
        increments: ΔŴ_n, with E|ΔŴ_n|² = L²·dt.
        heat_integral: ∫_0^dt e^{-⟨n⟩²(dt-s)} dŴ_n(s), jointly Gaussian with
            ``increments``.
        stream: Substream the slab was drawn from (None for derived slabs).
    """

    grid: GridSpec
    dt: float
    increments: np.ndarray
    heat_integral: np.ndarray
    stream: Optional[SeededStream] = None

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.increments.shape[:-2]


def sample_white_noise_slab(
    grid: GridSpec, dt: float, stream: SeededStream, batch_shape: Tuple[int, ...] = ()
) -> NoiseSlab:
    """Draw one slab of white noise with exact joint increment/OU-integral law."""
    if not (math.isfinite(dt) and dt > 0.0):
        raise ParameterError(f"dt must be positive, got {dt}")
    rng = stream.generator()
    w1 = unit_gaussian_coeffs(grid, rng, batch_shape)
    w2 = unit_gaussian_coeffs(grid, rng, batch_shape)
    rate = grid.bracket2()
    covariance = -np.expm1(-dt * rate) / rate
    variance = -np.expm1(-2.0 * dt * rate) / (2.0 * rate)
    along = covariance / math.sqrt(dt)
    across = np.sqrt(np.maximum(variance - along * along, 0.0))
    L = grid.L
    return NoiseSlab(
        grid=grid,
        dt=dt,
        increments=L * math.sqrt(dt) * w1,
        heat_integral=L * (along * w1 + across * w2),
        stream=stream,
    )


def coarsen_slabs(slabs: Sequence[NoiseSlab]) -> NoiseSlab:
    """Merge consecutive slabs into one, composing increments and OU integrals exactly."""
    if not slabs:
        raise ParameterError("coarsen_slabs needs at least one slab")
    grid = slabs[0].grid
    rate = grid.bracket2()
    increments = np.zeros_like(slabs[0].increments)
    integral = np.zeros_like(slabs[0].heat_integral)
    total = 0.0
    for slab in slabs:
        grid.require_same(slab.grid)
        increments = increments + slab.increments
        integral = np.exp(-slab.dt * rate) * integral + slab.heat_integral
        total += slab.dt
    return NoiseSlab(grid, total, increments, integral, stream=None)


def white_noise_pairing(slab: NoiseSlab, phi: SpectralField) -> np.ndarray:
    """⟨ξ, φ ⊗ 1_slab⟩ for a real test function φ constant in time over the slab."""
    slab.grid.require_same(phi.grid)
    total = np.sum(slab.increments * np.conj(phi.coeffs), axis=(-2, -1))
    return total.real / slab.grid.L**2


def evolve_heat_convolution(
    state: SpectralField, slab: NoiseSlab, cutoff: Optional[np.ndarray] = None
) -> SpectralField:
    """Exact OU step of (∂_t + 1 - Δ)Ψ = √2 ξ over one slab.

    Args:
        state: Ψ at the start of the slab.
        slab: Noise for the slab, on the same grid.
        cutoff: Optional symbol applied to the noise (noise-truncated models).

    Returns:
        Ψ at the end of the slab. Started from μ_L the marginal law stays μ_L.
    """
    state.grid.require_same(slab.grid)
    decay = np.exp(-slab.dt * state.grid.bracket2())
    forcing = math.sqrt(2.0) * slab.heat_integral
    if cutoff is not None:
        forcing = cutoff * forcing
    return state.with_coeffs(decay * state.coeffs + forcing)

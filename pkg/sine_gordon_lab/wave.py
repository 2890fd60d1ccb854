"""Damped stochastic wave flow, integrated exactly mode by mode.

The linear operator ∂_t² + ∂_t + (1-Δ) has roots -1/2 ± i⟨⟨n⟩⟩ on mode n,
with ⟨⟨n⟩⟩ = (3/4 + |n|²)^{1/2}. Steps use the closed-form 2×2 fundamental
matrix, the closed-form Duhamel response to a forcing frozen over the step and
the closed-form Gram matrix of the stochastic Duhamel increment, so a linear run
has no time discretisation error at all.

The truncated model puts Π_N on the noise by default,

    ∂_t²u + ∂_t u + (1-Δ)u = -γ^wave(t) sin(βu) + √2 Π_N ξ,

and u = Ψ^wave + v splits it into the wave stochastic convolution and the
remainder ∂_t²v + ∂_t v + (1-Δ)v = -Im(e^{iβv}Θ^wave).
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from sine_gordon_lab import renorm
from sine_gordon_lab.chaos import ChaosField, build_theta_wave
from sine_gordon_lab.errors import ParameterError
from sine_gordon_lab.fourier import GridSpec, SpectralField, cutoff_symbol, forward_transform, inverse_transform
from sine_gordon_lab.noise import SeededStream, unit_gaussian_coeffs
from sine_gordon_lab.norms import sobolev_norm
from sine_gordon_lab.parabolic import (
    DynamicsConfig,
    Placement,
    ThetaInput,
    default_dt_max,
    remainder_forcing,
    sine_nonlinearity,
)
from sine_gordon_lab.trajectory import TrajectoryRecord

logger = logging.getLogger(__name__)


def wave_frequency(grid: GridSpec) -> np.ndarray:
    """⟨⟨n⟩⟩ = (3/4 + |n|²)^{1/2}."""
    return np.sqrt(0.75 + grid.mode_norm2())


@dataclass(frozen=True)
class WaveState:
    """Position and velocity at time ``t``.

    ``gamma`` is not stored: the wave renormalisation γ^wave(t) depends on the
    time elapsed since the stochastic convolution was started at t = 0.
    """

    t: float
    position: SpectralField
    velocity: SpectralField
    beta2: float
    N: float
    placement: Placement = Placement.NOISE
    stream: Optional[SeededStream] = None
    chi: str = "smooth"
    oversample: int = 2

    def __post_init__(self):
        if not (self.position.is_real and self.velocity.is_real):
            raise ParameterError("wave states must be real fields")
        self.position.grid.require_same(self.velocity.grid)
        object.__setattr__(self, "placement", Placement(self.placement))

    @property
    def grid(self) -> GridSpec:
        return self.position.grid

    def advanced(self, dt: float, position: np.ndarray, velocity: np.ndarray) -> "WaveState":
        return WaveState(
            self.t + dt,
            self.position.with_coeffs(position),
            self.velocity.with_coeffs(velocity),
            self.beta2,
            self.N,
            self.placement,
            self.stream,
            self.chi,
            self.oversample,
        )


def wave_state(
    position: SpectralField,
    velocity: Optional[SpectralField],
    beta2: float,
    N: float,
    config: DynamicsConfig = DynamicsConfig(placement=Placement.NOISE),
    stream: Optional[SeededStream] = None,
) -> WaveState:
    """State at t = 0; a missing velocity means ∂_t u(0) = 0."""
    if velocity is None:
        velocity = SpectralField.zeros(position.grid, position.batch_shape)
    return WaveState(0.0, position, velocity, beta2, N, config.placement, stream, config.chi, config.oversample)


@dataclass(frozen=True)
class WavePropagator:
    """Per-mode closed forms for one step of length h.

    ``uu, uv, vu, vv`` form the fundamental matrix, ``force_u, force_v`` the
    response to a unit forcing held constant over the step.
    """

    h: float
    uu: np.ndarray
    uv: np.ndarray
    vu: np.ndarray
    vv: np.ndarray
    force_u: np.ndarray
    force_v: np.ndarray


def wave_propagator(grid: GridSpec, h: float) -> WavePropagator:
    """Fundamental matrix of the damped wave operator over time h."""
    if not (math.isfinite(h) and h >= 0.0):
        raise ParameterError(f"h must be >= 0, got {h}")
    w = wave_frequency(grid)
    bracket2 = grid.bracket2()
    damping = math.exp(-0.5 * h)
    cos, sin = np.cos(w * h), np.sin(w * h)
    d = damping * sin / w
    return WavePropagator(
        h=h,
        uu=damping * (cos + 0.5 * sin / w),
        uv=d,
        vu=-bracket2 * d,
        vv=damping * (cos - 0.5 * sin / w),
        force_u=(w - damping * (w * cos + 0.5 * sin)) / (w * bracket2),
        force_v=d,
    )


def wave_noise_gram(grid: GridSpec, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """∫_0^h D², ∫_0^h D·D' and ∫_0^h D'² per mode, D(t) = e^{-t/2} sin(t⟨⟨n⟩⟩)/⟨⟨n⟩⟩."""
    w = wave_frequency(grid)
    w2 = w * w
    damping = math.exp(-h)
    E = -math.expm1(-h)
    C = (1.0 + damping * (2.0 * w * np.sin(2.0 * w * h) - np.cos(2.0 * w * h))) / (1.0 + 4.0 * w2)
    S = (2.0 * w - damping * (np.sin(2.0 * w * h) + 2.0 * w * np.cos(2.0 * w * h))) / (1.0 + 4.0 * w2)
    d = math.exp(-0.5 * h) * np.sin(w * h) / w
    dd = (E - C) / (2.0 * w2)
    dv = 0.5 * d * d
    vv = 0.5 * (E + C) - 0.5 * S / w + (E - C) / (8.0 * w2)
    return dd, dv, vv


@dataclass(frozen=True)
class WaveNoiseSlab:
    """Stochastic Duhamel increment over one step.

    Attributes:
        position: ∫_0^dt D(dt-s) dŴ_n(s).
        velocity: ∫_0^dt D'(dt-s) dŴ_n(s), jointly Gaussian with ``position``.
    """

    grid: GridSpec
    dt: float
    position: np.ndarray
    velocity: np.ndarray
    stream: Optional[SeededStream] = None


def sample_wave_noise_slab(
    grid: GridSpec, dt: float, stream: SeededStream, batch_shape: Tuple[int, ...] = ()
) -> WaveNoiseSlab:
    """Draw the exact Gaussian increment via a per-mode Cholesky factor of the Gram matrix."""
    if not (math.isfinite(dt) and dt > 0.0):
        raise ParameterError(f"dt must be positive, got {dt}")
    dd, dv, vv = wave_noise_gram(grid, dt)
    c11 = np.sqrt(np.maximum(dd, 0.0))
    c21 = np.divide(dv, c11, out=np.zeros_like(dv), where=c11 > 0.0)
    c22 = np.sqrt(np.maximum(vv - c21 * c21, 0.0))
    rng = stream.generator()
    w1 = unit_gaussian_coeffs(grid, rng, batch_shape)
    w2 = unit_gaussian_coeffs(grid, rng, batch_shape)
    L = grid.L
    return WaveNoiseSlab(grid, dt, L * c11 * w1, L * (c21 * w1 + c22 * w2), stream)


def _free_flow(state: WaveState, prop: WavePropagator) -> Tuple[np.ndarray, np.ndarray]:
    u, v = state.position.coeffs, state.velocity.coeffs
    return prop.uu * u + prop.uv * v, prop.vu * u + prop.vv * v


def _noise_forcing(state: WaveState, slab: WaveNoiseSlab, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    if not math.isclose(slab.dt, dt, rel_tol=1e-12):
        raise ParameterError(f"slab covers dt={slab.dt}, step asked for dt={dt}")
    state.grid.require_same(slab.grid)
    scale = math.sqrt(2.0)
    if state.placement is Placement.NOISE:
        scale = scale * cutoff_symbol(state.grid, state.N, state.chi)
    return scale * slab.position, scale * slab.velocity


def wave_linear_step(state: WaveState, dt: float, slab: Optional[WaveNoiseSlab] = None) -> WaveState:
    """Exact step of ∂_t²u + ∂_t u + (1-Δ)u = √2ξ (or no forcing when ``slab`` is None)."""
    if not dt > 0.0:
        raise ParameterError(f"dt must be positive, got {dt}")
    u, v = _free_flow(state, wave_propagator(state.grid, dt))
    if slab is not None:
        noise_u, noise_v = _noise_forcing(state, slab, dt)
        u, v = u + noise_u, v + noise_v
    return state.advanced(dt, u, v)


def _check_step(state: WaveState, dt: float, dt_max: Optional[float]) -> None:
    limit = default_dt_max(state.N) if dt_max is None else dt_max
    if not 0.0 < dt <= limit * (1.0 + 1e-12):
        raise ParameterError(f"dt={dt} must lie in (0, {limit}] for N={state.N}")
    state.grid.require_resolved(state.N)


def step_truncated_wave(
    state: WaveState, dt: float, slab: WaveNoiseSlab, dt_max: Optional[float] = None
) -> WaveState:
    """One step of the truncated hyperbolic model with γ^wave evaluated at the step's left end."""
    _check_step(state, dt, dt_max)
    prop = wave_propagator(state.grid, dt)
    gamma_value = renorm.gamma_wave(state.beta2, state.grid, state.N, state.t, state.chi)
    drift = sine_nonlinearity(
        state.position, gamma_value, state.beta2, state.N, state.placement, state.chi, state.oversample
    )
    u, v = _free_flow(state, prop)
    noise_u, noise_v = _noise_forcing(state, slab, dt)
    return state.advanced(dt, u + prop.force_u * drift + noise_u, v + prop.force_v * drift + noise_v)


def step_wave_remainder(
    state: WaveState,
    theta_plus: ThetaInput,
    theta_minus: ThetaInput,
    dt: float,
    dt_max: Optional[float] = None,
) -> WaveState:
    """Exact linear flow plus the Duhamel response to -Im(f(v)Θ^wave) frozen over the step."""
    _check_step(state, dt, dt_max)
    prop = wave_propagator(state.grid, dt)
    forcing = remainder_forcing(
        state.position,
        theta_plus,
        theta_minus,
        state.beta2,
        state.N,
        state.placement,
        state.chi,
        state.oversample,
    )
    u, v = _free_flow(state, prop)
    return state.advanced(dt, u + prop.force_u * forcing, v + prop.force_v * forcing)


def evolve_wave_convolution(psi: WaveState, slab: WaveNoiseSlab) -> WaveState:
    """Advance (Ψ^wave, ∂_tΨ^wave) over one slab."""
    return wave_linear_step(psi, slab.dt, slab)


@dataclass(frozen=True)
class WaveRun:
    """Remainder (position and velocity) with the wave chaos that drove it."""

    v: TrajectoryRecord
    theta: TrajectoryRecord
    beta2: float
    N: float


def _steps(times: np.ndarray, limit: float):
    t = 0.0
    for target in times:
        gap = target - t
        count = max(1, math.ceil(gap / limit - 1e-9)) if gap > 0 else 0
        yield target, [gap / count] * count
        t = target


def simulate_wave_remainder(
    position: SpectralField,
    velocity: Optional[SpectralField],
    beta2: float,
    N: float,
    times: Sequence[float],
    stream: SeededStream,
    config: DynamicsConfig = DynamicsConfig(placement=Placement.NOISE),
    theta_scale: float = 1.0,
) -> WaveRun:
    """Integrate the remainder along a wave convolution started from zero data at t = 0.

    Θ^wave is rebuilt from Ψ^wave(t) with γ^wave(t) at the left end of every
    step; ``theta_scale`` = 0 gives linear runs.
    """
    grid = position.grid
    grid.require_resolved(N)
    state = wave_state(position, velocity, beta2, N, config, stream)
    psi = wave_state(SpectralField.zeros(grid, position.batch_shape), None, beta2, N, config)
    truncated = config.placement is Placement.NOISE

    def theta_of(path: WaveState) -> ChaosField:
        return build_theta_wave(path.position, beta2, N, path.t, 1, config.chi, truncated, config.oversample)

    positions: List[np.ndarray] = []
    velocities: List[np.ndarray] = []
    thetas: List[np.ndarray] = []
    index = 0
    for _, steps in _steps(np.asarray(times, dtype=float), config.limit(N)):
        for dt in steps:
            plus = theta_of(psi).values.scaled(theta_scale)
            state = step_wave_remainder(state, plus, plus.conjugate(), dt, config.limit(N))
            slab = sample_wave_noise_slab(grid, dt, stream.for_slab(index), position.batch_shape)
            psi = evolve_wave_convolution(psi, slab)
            index += 1
        positions.append(state.position.coeffs)
        velocities.append(state.velocity.coeffs)
        thetas.append(theta_of(psi).values.coeffs * theta_scale)
    meta = {"scheme": "exact_wave_exponential", "theta_scale": theta_scale, **config.as_dict()}
    times = np.asarray(times, dtype=float)
    fine = grid.refined(config.oversample)
    return WaveRun(
        v=TrajectoryRecord(
            times,
            SpectralField(grid, np.stack(positions)),
            SpectralField(grid, np.stack(velocities)),
            integrator=meta,
            stream=stream,
        ),
        theta=TrajectoryRecord(times, SpectralField(fine, np.stack(thetas), is_real=False), integrator=meta),
        beta2=beta2,
        N=N,
    )


@dataclass(frozen=True)
class WaveEnergyReport:
    """Energy ‖v‖_{H^{1-α}} + ‖∂_t v‖_{H^{-α}} along a trajectory.

    Attributes:
        times: Sample times in [0, T].
        energy: Per-time energy (time axis first, then members).
        sup: Supremum over the sampled times.
        data_term: Energy of the initial data ‖(v(0), ∂_t v(0))‖.
        forcing_term: t·2·sup_{t'<=t}‖e^{iβv}‖_{H^α}‖Θ^wave‖_{W^{-α,∞}} (None without Θ).
    """

    alpha: float
    times: np.ndarray
    energy: np.ndarray
    sup: np.ndarray
    data_term: np.ndarray
    forcing_term: Optional[np.ndarray] = None

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "times": self.times.tolist(),
            "energy": self.energy.tolist(),
            "sup": np.asarray(self.sup).tolist(),
            "data_term": np.asarray(self.data_term).tolist(),
            "forcing_term": None if self.forcing_term is None else self.forcing_term.tolist(),
        }


def wave_energy(position: SpectralField, velocity: SpectralField, alpha: float) -> np.ndarray:
    return sobolev_norm(position, 1.0 - alpha) + sobolev_norm(velocity, -alpha)


def wave_energy_monitor(
    trajectory: TrajectoryRecord,
    alpha: float,
    T: float,
    theta: Optional[TrajectoryRecord] = None,
    beta2: Optional[float] = None,
) -> WaveEnergyReport:
    """Sup over sampled times in [0, T] of ‖v(t)‖_{H^{1-α}} + ‖∂_t v(t)‖_{H^{-α}}.

    With ``theta`` and ``beta2`` given, also reports the forcing side of the
    energy bound built from ‖f(v)‖_{H^α} and ‖Θ^wave‖_{W^{-α,∞}}.

    Raises:
        ParameterError: If α is outside (0, 1/2) or the trajectory lacks velocities.
    """
    if not 0.0 < alpha < 0.5:
        raise ParameterError(f"alpha must lie in (0, 1/2), got {alpha}")
    if trajectory.fields is None or trajectory.velocities is None:
        raise ParameterError("wave energy needs positions and velocities")
    mask = trajectory.times <= T * (1.0 + 1e-12)
    if not np.any(mask):
        raise ParameterError(f"trajectory has no samples in [0, {T}]")
    times = trajectory.times[mask]
    energy = wave_energy(trajectory.fields.member(mask), trajectory.velocities.member(mask), alpha)
    data_term = energy[0] if times[0] == 0.0 else np.full_like(energy[0], np.nan)
    forcing = None
    if theta is not None:
        if beta2 is None:
            raise ParameterError("beta2 is required to evaluate the forcing term")
        forcing = _forcing_term(trajectory.fields.member(mask), theta.fields.member(mask), alpha, beta2, times)
    return WaveEnergyReport(alpha, times, energy, np.max(energy, axis=0), data_term, forcing)


def _forcing_term(
    positions: SpectralField, thetas: SpectralField, alpha: float, beta2: float, times: np.ndarray
) -> np.ndarray:
    fine = thetas.grid
    phase = inverse_transform(positions, oversample=fine.n_side // positions.grid.n_side)
    f_v = forward_transform(np.exp(1j * math.sqrt(beta2) * phase), fine, is_real=False)
    product = sobolev_norm(f_v, alpha) * sobolev_norm(thetas, -alpha, p=math.inf, oversample=1)
    running = np.maximum.accumulate(product, axis=0)
    return 2.0 * times.reshape((-1,) + (1,) * (running.ndim - 1)) * running

"""Exponential-Euler integration of the truncated parabolic sine-Gordon model.

Two equations are stepped with the same scheme (exact linear flow, nonlinearity
frozen over the step, exact OU noise):

    full model      ∂_t u + (1-Δ)u = -γ_N Π_N sin(βΠ_N u) + √2 ξ
    remainder       ∂_t v + (1-Δ)v = -Π_N Im(e^{iβΠ_N v} Θ)

with the nonlinearity-truncated placement, or with Π_N moved onto the noise
(``Placement.NOISE``), in which case the nonlinearity is -γ_N sin(βu) and the
remainder forcing is -Im(e^{iβv}Θ). Either way u = Ψ + v holds exactly along
coupled paths.

The a priori monitors fit constants (K₁, K₂) for bounds of the form
lhs <= K₁·a + K₂·b over an ensemble of remainder runs and validate them on a
second ensemble.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from sine_gordon_lab import renorm
from sine_gordon_lab.chaos import ChaosField, build_theta
from sine_gordon_lab.errors import GridMismatchError, NumericalError, ParameterError, RegimeError
from sine_gordon_lab.fourier import (
    GridSpec,
    SpectralField,
    cutoff_symbol,
    forward_transform,
    inverse_transform,
    pad_modes,
    truncate_modes,
)
from sine_gordon_lab.noise import (
    NoiseSlab,
    SeededStream,
    evolve_heat_convolution,
    heat_factors,
    sample_gff,
    sample_white_noise_slab,
)
from sine_gordon_lab.norms import besov_norms, weighted_besov_norm, x_norm, y_norm, z_norm
from sine_gordon_lab.trajectory import TrajectoryRecord, norm_time_grid

logger = logging.getLogger(__name__)

THETA_GRID = (0.05, 0.1, 0.2)
PARA2_LIMIT = 0.1


class Placement(str, Enum):
    """Where the frequency projector Π_N acts."""

    NONLINEARITY = "nonlinearity"
    NOISE = "noise"


def default_dt_max(N: float) -> float:
    """1e-2 up to N = 128, halved for every further octave."""
    if N <= 128:
        return 1e-2
    return 1e-2 / 2.0 ** math.ceil(math.log2(N / 128.0))


@dataclass(frozen=True)
class DynamicsConfig:
    dt: float = 1e-2
    dt_max: Optional[float] = None
    placement: Placement = Placement.NONLINEARITY
    gamma_factor: float = 1.0
    oversample: int = 2
    chi: str = "smooth"

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "placement", Placement(self.placement))

    def limit(self, N: float) -> float:
        return self.dt_max if self.dt_max is not None else default_dt_max(N)

    def as_dict(self) -> dict:
        return {
            "dt": self.dt,
            "dt_max": self.dt_max,
            "placement": self.placement.value,
            "gamma_factor": self.gamma_factor,
            "oversample": self.oversample,
            "chi": self.chi,
        }


@dataclass(frozen=True)
class ParabolicState:
    """Solution (u or v) at time ``t`` with the parameters that drive it."""

    t: float
    field: SpectralField
    beta2: float
    N: float
    gamma: float
    placement: Placement = Placement.NONLINEARITY
    stream: Optional[SeededStream] = None
    chi: str = "smooth"
    oversample: int = 2

    def __post_init__(self):
        if not self.field.is_real:
            raise ParameterError("parabolic states must be real fields")
        object.__setattr__(self, "placement", Placement(self.placement))

    def advanced(self, dt: float, coeffs: np.ndarray) -> "ParabolicState":
        return ParabolicState(
            self.t + dt,
            self.field.with_coeffs(coeffs),
            self.beta2,
            self.N,
            self.gamma,
            self.placement,
            self.stream,
            self.chi,
            self.oversample,
        )


def initial_state(
    u0: SpectralField,
    beta2: float,
    N: float,
    config: DynamicsConfig = DynamicsConfig(),
    stream: Optional[SeededStream] = None,
) -> ParabolicState:
    """State at t = 0 with γ_N = gamma_factor·e^{β²σ_{L,N}/2}."""
    u0.grid.require_resolved(N)
    sigma = renorm.sigma_heat(u0.grid, N, config.chi)
    gamma_value = config.gamma_factor * renorm.gamma(beta2, sigma)
    return ParabolicState(0.0, u0, beta2, N, gamma_value, config.placement, stream, config.chi, config.oversample)


def _check_step(state: ParabolicState, dt: float, dt_max: Optional[float]) -> None:
    limit = default_dt_max(state.N) if dt_max is None else dt_max
    if not 0.0 < dt <= limit * (1.0 + 1e-12):
        raise ParameterError(f"dt={dt} must lie in (0, {limit}] for N={state.N}")
    state.field.grid.require_resolved(state.N)


def _to_fine(values_grid: GridSpec, coeffs: np.ndarray, oversample: int) -> np.ndarray:
    fine = values_grid.refined(oversample)
    return fine.n_side**2 / (2.0 * math.pi * fine.L**2) * np.fft.ifft2(
        pad_modes(coeffs, fine.n_side), axes=(-2, -1)
    ).real


def _back_to_grid(grid: GridSpec, values: np.ndarray, oversample: int) -> np.ndarray:
    fine = grid.refined(oversample)
    return truncate_modes(forward_transform(values, fine, is_real=True).coeffs, grid.n_side)


def sine_nonlinearity(
    field: SpectralField,
    gamma_value: float,
    beta2: float,
    N: float,
    placement: Placement,
    chi: str = "smooth",
    oversample: int = 2,
) -> np.ndarray:
    """Coefficients of -γ Π_N sin(βΠ_N u), or of -γ sin(βu) for the noise placement.

    The sine is taken pointwise on the oversampled grid.

    Raises:
        NumericalError: If a sample leaves the band |F| <= γ.
    """
    grid = field.grid
    chi_n = cutoff_symbol(grid, N, chi)
    coeffs = field.coeffs
    truncate = Placement(placement) is Placement.NONLINEARITY
    if truncate:
        coeffs = chi_n * coeffs
    values = -gamma_value * np.sin(math.sqrt(beta2) * _to_fine(grid, coeffs, oversample))
    if not np.all(np.abs(values) <= gamma_value * (1.0 + 1e-12)):
        raise NumericalError("drift left the band |F| <= gamma")
    drift = _back_to_grid(grid, values, oversample)
    return chi_n * drift if truncate else drift


def sg_drift(state: ParabolicState) -> np.ndarray:
    """Frozen nonlinearity of the full model at the state's time."""
    return sine_nonlinearity(
        state.field, state.gamma, state.beta2, state.N, state.placement, state.chi, state.oversample
    )


def step_truncated_sg(
    state: ParabolicState, dt: float, slab: NoiseSlab, dt_max: Optional[float] = None
) -> ParabolicState:
    """One exponential-Euler step of the truncated model over ``slab``.

    Raises:
        ParameterError: If dt exceeds dt_max or does not match the slab.
        ResolutionError: If the grid cannot resolve 2N.
        GridMismatchError: If the slab lives on another grid.
    """
    _check_step(state, dt, dt_max)
    if not math.isclose(slab.dt, dt, rel_tol=1e-12):
        raise ParameterError(f"slab covers dt={slab.dt}, step asked for dt={dt}")
    grid = state.field.grid
    grid.require_same(slab.grid)
    decay, duhamel = heat_factors(grid, dt)
    forcing = math.sqrt(2.0) * slab.heat_integral
    if state.placement is Placement.NOISE:
        forcing = cutoff_symbol(grid, state.N, state.chi) * forcing
    coeffs = decay * state.field.coeffs + duhamel * sg_drift(state) + forcing
    return state.advanced(dt, coeffs)


def integrate_truncated_sg(
    state: ParabolicState, slabs: Iterable[NoiseSlab], dt_max: Optional[float] = None
) -> ParabolicState:
    """Step through a sequence of slabs."""
    for slab in slabs:
        state = step_truncated_sg(state, slab.dt, slab, dt_max)
    return state


ThetaInput = Union[ChaosField, SpectralField, None]


def _theta_on(theta: ThetaInput, grid: GridSpec, oversample: int) -> Optional[np.ndarray]:
    if theta is None:
        return None
    values = theta.values if isinstance(theta, ChaosField) else theta
    fine = grid.refined(oversample)
    if values.grid.L != grid.L:
        raise GridMismatchError(f"theta lives on L={values.grid.L}, state on L={grid.L}")
    if values.grid.n_side != fine.n_side:
        if values.grid.n_side > fine.n_side:
            coeffs = truncate_modes(values.coeffs, fine.n_side)
        else:
            coeffs = pad_modes(values.coeffs, fine.n_side)
        values = SpectralField(fine, coeffs, is_real=False)
    return inverse_transform(SpectralField(fine, values.coeffs, is_real=False))


def remainder_forcing(
    v: SpectralField,
    theta_plus: ThetaInput,
    theta_minus: ThetaInput,
    beta2: float,
    N: float,
    placement: Placement,
    chi: str = "smooth",
    oversample: int = 2,
) -> np.ndarray:
    """Coefficients of -(1/2i)Σ_κ κ f^κ(w)Θ^κ with w = Π_N v or v depending on placement.

    For a conjugate pair Θ^- = conj Θ^+ this is -Im(e^{iβw}Θ^+). ``None``
    stands for Θ ≡ 0.
    """
    grid = v.grid
    plus = _theta_on(theta_plus, grid, oversample)
    minus = _theta_on(theta_minus, grid, oversample)
    if plus is None and minus is None:
        return np.zeros_like(v.coeffs)
    chi_n = cutoff_symbol(grid, N, chi)
    w_coeffs = chi_n * v.coeffs if Placement(placement) is Placement.NONLINEARITY else v.coeffs
    phase = math.sqrt(beta2) * _to_fine(grid, w_coeffs, oversample)
    total = 0.0
    if plus is not None:
        total = total + np.exp(1j * phase) * plus
    if minus is not None:
        total = total - np.exp(-1j * phase) * minus
    values = -(total / 2j).real
    forcing = _back_to_grid(grid, values, oversample)
    if Placement(placement) is Placement.NONLINEARITY:
        forcing = chi_n * forcing
    return forcing


def step_remainder(
    v_state: ParabolicState,
    theta_plus: ThetaInput,
    theta_minus: ThetaInput,
    dt: float,
    dt_max: Optional[float] = None,
) -> ParabolicState:
    """One exponential-Euler step of the remainder equation with Θ^± frozen."""
    _check_step(v_state, dt, dt_max)
    decay, duhamel = heat_factors(v_state.field.grid, dt)
    forcing = remainder_forcing(
        v_state.field,
        theta_plus,
        theta_minus,
        v_state.beta2,
        v_state.N,
        v_state.placement,
        v_state.chi,
        v_state.oversample,
    )
    return v_state.advanced(dt, decay * v_state.field.coeffs + duhamel * forcing)


def simulate_truncated_sg(
    u0: SpectralField,
    beta2: float,
    N: float,
    T: float,
    config: DynamicsConfig,
    stream: SeededStream,
    record_every: int = 0,
) -> TrajectoryRecord:
    """Run the truncated model from ``u0`` to time T with fresh slabs from ``stream``.

    Records u(0) and u(T), plus every ``record_every``-th step when positive.
    """
    steps = int(round(T / config.dt))
    if steps < 0 or not math.isclose(steps * config.dt, T, rel_tol=1e-9, abs_tol=1e-12):
        raise ParameterError(f"T={T} is not a multiple of dt={config.dt}")
    state = initial_state(u0, beta2, N, config, stream)
    times = [0.0]
    snapshots = [state.field.coeffs]
    for j in range(steps):
        slab = sample_white_noise_slab(u0.grid, config.dt, stream.for_slab(j), u0.batch_shape)
        state = step_truncated_sg(state, config.dt, slab, config.limit(N))
        if j == steps - 1 or (record_every > 0 and (j + 1) % record_every == 0):
            times.append(state.t)
            snapshots.append(state.field.coeffs)
    return TrajectoryRecord(
        times=np.asarray(times),
        fields=SpectralField(u0.grid, np.stack(snapshots)),
        integrator={"scheme": "exponential_euler", "gamma": state.gamma, **config.as_dict()},
        stream=stream,
    )


@dataclass(frozen=True)
class RemainderRun:
    """A remainder trajectory with the chaos path that drove it.

    ``theta`` stores Θ^+ (complex, on the oversampled grid) at the same times
    as ``v``; Θ^- is its conjugate. Leading field axis is time, then members.
    """

    v: TrajectoryRecord
    theta: TrajectoryRecord
    v0: SpectralField
    beta2: float
    N: float


def simulate_remainder(
    v0: SpectralField,
    psi0: SpectralField,
    beta2: float,
    N: float,
    times: Sequence[float],
    stream: SeededStream,
    config: DynamicsConfig = DynamicsConfig(),
    theta_scale: float = 1.0,
) -> RemainderRun:
    """Integrate the remainder along an exact OU path Ψ started from ``psi0``.

    Each interval between sample times is split into equal steps no longer
    than dt_max; Θ is rebuilt from Ψ at the left end of every step.
    ``theta_scale`` = 0 switches the chaos off (linear runs).
    """
    grid = v0.grid
    grid.require_resolved(N)
    sigma = renorm.sigma_heat(grid, N, config.chi)
    gamma_value = renorm.gamma(beta2, sigma)
    truncated = config.placement is Placement.NOISE
    chi_n = cutoff_symbol(grid, N, config.chi)
    psi = psi0.with_coeffs(chi_n * psi0.coeffs) if truncated else psi0
    noise_cutoff = chi_n if truncated else None
    state = ParabolicState(0.0, v0, beta2, N, gamma_value, config.placement, stream, config.chi, config.oversample)

    def theta_of(path: SpectralField) -> ChaosField:
        return build_theta(path, beta2, N, gamma_value, 1, sigma, config.chi, truncated, config.oversample)

    limit = config.limit(N)
    v_snapshots: List[np.ndarray] = []
    theta_snapshots: List[np.ndarray] = []
    t = 0.0
    slab_index = 0
    for target in np.asarray(times, dtype=float):
        gap = target - t
        substeps = max(1, math.ceil(gap / limit - 1e-9)) if gap > 0 else 0
        for _ in range(substeps):
            dt = gap / substeps
            theta = theta_of(psi)
            plus = theta.values.scaled(theta_scale)
            state = step_remainder(state, plus, plus.conjugate(), dt, limit)
            slab = sample_white_noise_slab(grid, dt, stream.for_slab(slab_index), v0.batch_shape)
            psi = evolve_heat_convolution(psi, slab, noise_cutoff)
            slab_index += 1
        t = target
        v_snapshots.append(state.field.coeffs)
        theta_snapshots.append(theta_of(psi).values.coeffs * theta_scale)
    fine = grid.refined(config.oversample)
    meta = {"scheme": "exponential_euler", "gamma": gamma_value, "theta_scale": theta_scale, **config.as_dict()}
    return RemainderRun(
        v=TrajectoryRecord(np.asarray(times), SpectralField(grid, np.stack(v_snapshots)), integrator=meta, stream=stream),
        theta=TrajectoryRecord(
            np.asarray(times), SpectralField(fine, np.stack(theta_snapshots), is_real=False), integrator=meta
        ),
        v0=v0,
        beta2=beta2,
        N=N,
    )


@dataclass(frozen=True)
class AprioriReport:
    """Fitted bound lhs <= K₁·a + K₂·b with per-run margins.

    Attributes:
        lhs: X-norm (or Y-norm) of every training run.
        v0_norms: ‖v(0)‖ in C^{-δ} (or its weighted version).
        theta_norms: ‖Θ^+‖ in C_T C^{2δ-s} (or the Z-norm at the chosen A).
        K1, K2, A, theta: Selected constants; A = 1/theta.
        margins: rhs - lhs on the training runs.
        validation_margins: rhs - lhs on the validation runs (if any).
        fits: One entry per θ of the grid with its constants and validation result.
        headroom: Factor applied to the linear-programming optimum.
        validated: Whether the chosen constants keep every validation margin >= 0.
        params: δ, s, T and, for the weighted monitor, λ, M, ℓ_max.
    """

    lhs: np.ndarray
    v0_norms: np.ndarray
    theta_norms: np.ndarray
    K1: float
    K2: float
    A: float
    theta: float
    margins: np.ndarray
    validation_margins: Optional[np.ndarray]
    fits: Tuple[Dict[str, float], ...]
    headroom: float
    validated: bool
    params: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "K1": self.K1,
            "K2": self.K2,
            "A": self.A,
            "theta": self.theta,
            "headroom": self.headroom,
            "validated": self.validated,
            "lhs": self.lhs.tolist(),
            "v0_norms": self.v0_norms.tolist(),
            "theta_norms": self.theta_norms.tolist(),
            "margins": self.margins.tolist(),
            "validation_margins": None if self.validation_margins is None else self.validation_margins.tolist(),
            "fits": list(self.fits),
            "params": dict(self.params),
        }


@dataclass
class _Measurements:
    lhs: List[float] = field(default_factory=list)
    a: List[float] = field(default_factory=list)
    b: Dict[float, List[float]] = field(default_factory=dict)

    def arrays(self):
        return np.asarray(self.lhs), np.asarray(self.a), {k: np.asarray(v) for k, v in self.b.items()}


def smoothness_index(beta2: float, delta: float) -> float:
    """s = β²/4π + 3δ, required to stay below 1."""
    s = beta2 / (4.0 * math.pi) + 3.0 * delta
    if not s < 1.0:
        raise RegimeError(f"beta2/4pi + 3 delta = {s:.4f} must stay below 1")
    return s


def _measure(runs: Iterable[RemainderRun], delta: float, T: float, thetas: Sequence[float], weighted=None) -> _Measurements:
    out = _Measurements(b={theta: [] for theta in thetas})
    for run in runs:
        s = smoothness_index(run.beta2, delta)
        if weighted is None:
            lhs = np.atleast_1d(x_norm(run.v, delta, s, T))
            a = np.atleast_1d(besov_norms(run.v0, -delta))
            mask = run.theta.times <= T * (1.0 + 1e-12)
            sup = np.max(besov_norms(run.theta.fields.member(mask), 2.0 * delta - s, oversample=1), axis=0)
            sup = np.atleast_1d(sup)
            for theta in thetas:
                out.b[theta].extend((2.0 * sup ** (1.0 / theta)).tolist())
        else:
            lam, M, ell_max = weighted
            lhs = np.atleast_1d(y_norm(run.v, delta, s, T, lam, M, ell_max))
            members = run.v0.batch_shape[0] if run.v0.batch_shape else 0
            if members:
                a = np.array([weighted_besov_norm(run.v0.member(i), -delta, lam, M, ell_max).value for i in range(members)])
            else:
                a = np.array([weighted_besov_norm(run.v0, -delta, lam, M, ell_max).value])
            for theta in thetas:
                z = z_norm(run.theta, 2.0 * delta - s, T, lam, M, 1.0 / theta, ell_max)
                out.b[theta].extend((2.0 * np.atleast_1d(z)).tolist())
        out.lhs.extend(lhs.tolist())
        out.a.extend(a.tolist())
    if not out.lhs:
        raise ParameterError("a priori monitor needs at least one run")
    return out


def _fit_constants(lhs: np.ndarray, a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    """Smallest (K₁, K₂) >= 0 in the mean-rhs sense with K₁a + K₂b >= lhs on every run."""
    if not np.any(lhs > 0.0):
        return 0.0, 0.0
    scale_a = float(np.mean(a)) or 1.0
    scale_b = float(np.mean(b)) or 1.0
    design = np.column_stack([a / scale_a, b / scale_b])
    result = optimize.linprog(
        c=np.mean(design, axis=0) + 1e-12,
        A_ub=-design,
        b_ub=-lhs,
        bounds=[(0.0, None), (0.0, None)],
        method="highs",
    )
    if not result.success:
        raise NumericalError(f"constant fit failed: {result.message}")
    return float(result.x[0] / scale_a), float(result.x[1] / scale_b)


def _monitor(
    train: _Measurements,
    validation: Optional[_Measurements],
    thetas: Sequence[float],
    headroom: float,
    params: Dict[str, float],
) -> AprioriReport:
    lhs, a, b = train.arrays()
    check = validation.arrays() if validation is not None else None
    fits = []
    for theta in thetas:
        K1, K2 = _fit_constants(lhs, a, b[theta])
        K1, K2 = headroom * K1, headroom * K2
        if check is not None:
            v_lhs, v_a, v_b = check
            margins = K1 * v_a + K2 * v_b[theta] - v_lhs
        else:
            margins = K1 * a + K2 * b[theta] - lhs
        fits.append({"theta": theta, "A": 1.0 / theta, "K1": K1, "K2": K2, "min_margin": float(np.min(margins))})
    passing = [f for f in fits if f["min_margin"] >= 0.0]
    chosen = min(passing, key=lambda f: f["K2"]) if passing else max(fits, key=lambda f: f["min_margin"])
    if not passing:
        logger.warning("no theta on the grid keeps every validation margin nonnegative")
    theta = chosen["theta"]
    K1, K2 = chosen["K1"], chosen["K2"]
    validation_margins = None
    if check is not None:
        v_lhs, v_a, v_b = check
        validation_margins = K1 * v_a + K2 * v_b[theta] - v_lhs
    return AprioriReport(
        lhs=lhs,
        v0_norms=a,
        theta_norms=b[theta],
        K1=K1,
        K2=K2,
        A=1.0 / theta,
        theta=theta,
        margins=K1 * a + K2 * b[theta] - lhs,
        validation_margins=validation_margins,
        fits=tuple(fits),
        headroom=headroom,
        validated=bool(passing),
        params=params,
    )


def apriori_monitor(
    runs: Iterable[RemainderRun],
    delta: float,
    T: float,
    validation_runs: Optional[Iterable[RemainderRun]] = None,
    thetas: Sequence[float] = THETA_GRID,
    headroom: float = 1.25,
) -> AprioriReport:
    """Fit K₁, K₂ in ‖v‖_{X^{-δ,s}_T} <= K₁‖v(0)‖_{C^{-δ}} + K₂Σ_κ‖Θ^κ‖^A_{C_T C^{2δ-s}}.

    ``theta_norms`` in the report hold 2‖Θ^+‖^A, the sum over both signs.

    Raises:
        ParameterError: For an empty ensemble.
        RegimeError: If β²/4π + 3δ >= 1.
    """
    train = _measure(runs, delta, T, thetas)
    validation = None if validation_runs is None else _measure(validation_runs, delta, T, thetas)
    return _monitor(train, validation, thetas, headroom, {"delta": delta, "T": T})


def check_para2(T: float, lam: float, M: float) -> None:
    """Require T·e^λ/M <= 0.1."""
    value = T * math.exp(lam) / M
    if value > PARA2_LIMIT:
        raise ParameterError(f"T*exp(lambda)/M = {value:.4f} exceeds {PARA2_LIMIT}")


def apriori_monitor_weighted(
    runs: Iterable[RemainderRun],
    delta: float,
    T: float,
    lam: float,
    M: float,
    ell_max: int,
    validation_runs: Optional[Iterable[RemainderRun]] = None,
    thetas: Sequence[float] = THETA_GRID,
    headroom: float = 1.25,
) -> AprioriReport:
    """Weighted analogue: Y-norm lhs, weighted C^{-δ}_{λ,M} data and Z-norm chaos terms.

    Raises:
        ParameterError: If T·e^λ/M > 0.1 or the ensemble is empty.
    """
    check_para2(T, lam, M)
    weighted = (lam, M, ell_max)
    train = _measure(runs, delta, T, thetas, weighted)
    validation = None if validation_runs is None else _measure(validation_runs, delta, T, thetas, weighted)
    params = {"delta": delta, "T": T, "lam": lam, "M": M, "ell_max": ell_max}
    return _monitor(train, validation, thetas, headroom, params)


def remainder_runs(
    grid: GridSpec,
    beta2: float,
    N: float,
    T: float,
    members: int,
    stream: SeededStream,
    config: DynamicsConfig = DynamicsConfig(),
    batch: int = 4,
    theta_scale: float = 1.0,
) -> Iterable[RemainderRun]:
    """Lazily generate stationary-initialised remainder runs in chunks of ``batch``.

    u(0) and Ψ(0) are independent free-field samples and v(0) = u(0) - Ψ(0).
    """
    times = norm_time_grid(T)
    index = 0
    while index * batch < members:
        size = min(batch, members - index * batch)
        member_stream = stream.for_member(index)
        u0 = sample_gff(grid, member_stream.for_experiment(f"{stream.experiment}/u0").for_member(index), (size,))
        psi0 = sample_gff(grid, member_stream.for_experiment(f"{stream.experiment}/psi0").for_member(index), (size,))
        yield simulate_remainder(u0 - psi0, psi0, beta2, N, times, member_stream, config, theta_scale)
        index += 1

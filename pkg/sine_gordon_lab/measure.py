"""Sampling the truncated sine-Gordon Gibbs measure and checking it against the dynamics.

The measure is dρ_{L,N}(u) ∝ exp(V(u)) dμ_L(u) with
V(u) = (γ_{L,N}/β)∫cos(βΠ_N u)dx. Samples come from preconditioned
Crank-Nicolson chains, whose proposal preserves μ_L so that only the potential
enters the acceptance ratio. The chains run vectorised as one batch.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from sine_gordon_lab import renorm
from sine_gordon_lab.chaos import build_theta, check_dyadic, scan_grid
from sine_gordon_lab.errors import ConfigError, GridMismatchError, ParameterError, RegimeError, ScanError
from sine_gordon_lab.fourier import GridSpec, SpectralField, cutoff_symbol, forward_transform, inverse_transform
from sine_gordon_lab.noise import SeededStream, sample_gff, unit_gaussian_coeffs
from sine_gordon_lab.norms import besov_norms, covering_shells, sobolev_norm, weighted_besov_norm, window_bump
from sine_gordon_lab.parabolic import DynamicsConfig, Placement, simulate_truncated_sg
from sine_gordon_lab.parallel import chunk_sizes, ensemble_map
from sine_gordon_lab.stats import (
    EnsembleStats,
    effective_sample_size,
    fit_log_slope,
    integrated_autocorrelation_time,
    ks_pvalue,
    mean_shift,
    scan_point,
    split_rhat,
)

logger = logging.getLogger(__name__)

BETA2_LIMIT = 4.0 * math.pi
RHAT_LIMIT = 1.05
ACCEPTANCE_BAND = 0.1
DEFAULT_MODES = ((1, 0), (0, 1), (1, 1))
SHIFT_LIMIT = 3.0

Observable = Callable[[SpectralField], np.ndarray]


def _require_regime(beta2: float) -> None:
    if not 0.0 < beta2 < BETA2_LIMIT:
        raise RegimeError(f"beta2={beta2} must satisfy 0 < beta2 < 4pi")


def _cos_samples(u: SpectralField, beta2: float, N: float, chi: str, oversample: int) -> np.ndarray:
    u_n = u.with_coeffs(cutoff_symbol(u.grid, N, chi) * u.coeffs)
    return np.cos(math.sqrt(beta2) * inverse_transform(u_n, oversample=oversample))


def potential(
    u: SpectralField, N: float, beta2: float, gamma: float, chi: str = "smooth", oversample: int = 2
) -> np.ndarray:
    """V(u) = (γ/β)∫cos(βΠ_N u)dx per member.

    The integrand is band limited, so the mean over the oversampled grid times
    the torus area is its exact integral.
    """
    mean = np.mean(_cos_samples(u, beta2, N, chi, oversample), axis=(-2, -1))
    return gamma / math.sqrt(beta2) * u.grid.area * mean


def observable_cos(u: SpectralField, beta2: float, N: float, chi: str = "smooth", oversample: int = 2) -> np.ndarray:
    """O₁(u) = (2πL)^{-2}∫cos(βΠ_N u)dx."""
    return np.mean(_cos_samples(u, beta2, N, chi, oversample), axis=(-2, -1))


def observable_mode_power(u: SpectralField, modes: Sequence[Tuple[int, int]] = DEFAULT_MODES) -> np.ndarray:
    """O₂(u) = |û(n*)|² for fixed FFT indices n*, stacked on a last axis."""
    return np.stack([np.abs(u.coeffs[..., i, j]) ** 2 for i, j in modes], axis=-1)


def observable_sobolev(u: SpectralField, delta: float) -> np.ndarray:
    """O₃(u) = ‖u‖²_{H^{-δ}}."""
    return sobolev_norm(u, -delta) ** 2


@dataclass(frozen=True)
class ChainConfig:
    """pCN sampler settings.

    ``burn_in`` and ``thin`` default to 10τ and 2τ, with τ the integrated
    autocorrelation time of O₁ on the pilot run.
    """

    n_chains: int = 8
    members: int = 200
    step_size: float = 0.3
    target_acceptance: float = 0.3
    tune: bool = True
    pilot_steps: int = 400
    burn_in: Optional[int] = None
    thin: Optional[int] = None
    min_ess: float = 100.0
    potential_off: bool = False
    gamma_factor: float = 1.0
    oversample: int = 2
    chi: str = "smooth"

    def __post_init__(self):
        if self.n_chains < 1 or self.members < 1:
            raise ParameterError("n_chains and members must be positive")
        if not 0.0 < self.step_size <= 1.0:
            raise ParameterError(f"step_size must lie in (0, 1], got {self.step_size}")
        if not 0.0 < self.target_acceptance < 1.0:
            raise ParameterError(f"target_acceptance must lie in (0, 1), got {self.target_acceptance}")

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class GibbsEnsemble:
    """Thinned pCN samples of ρ_{L,N} with their sampler record.

    ``members`` is one batched SpectralField with batch shape (count,).
    """

    grid: GridSpec
    N: float
    beta2: float
    gamma: float
    members: SpectralField
    step_size: float
    acceptance_rate: float
    burn_in: int
    thin: int
    chain_length: int
    tau: float
    ess: float
    rhat: float
    sampler: str = "pcn"
    stream: Optional[SeededStream] = None
    config: Optional[ChainConfig] = None
    warnings: Tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return self.members.batch_shape[0]

    def member(self, index: int) -> SpectralField:
        return self.members.member(index)

    def metadata(self) -> dict:
        return {
            "L": self.grid.L,
            "n_side": self.grid.n_side,
            "N": self.N,
            "beta2": self.beta2,
            "gamma": self.gamma,
            "members": len(self),
            "sampler": self.sampler,
            "step_size": self.step_size,
            "acceptance_rate": self.acceptance_rate,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "chain_length": self.chain_length,
            "tau": self.tau,
            "ess": self.ess,
            "rhat": self.rhat,
            "stream": None if self.stream is None else self.stream.as_dict(),
            "chain": None if self.config is None else self.config.as_dict(),
            "warnings": list(self.warnings),
        }


class _PCNChains:
    """State of ``n`` vectorised pCN chains."""

    def __init__(self, grid, N, beta2, gamma_value, config: ChainConfig, stream: SeededStream):
        self.grid = grid
        self.N = N
        self.beta2 = beta2
        self.gamma = gamma_value
        self.config = config
        self.stream = stream
        self.rho = config.step_size
        self.step = 0
        self.u = sample_gff(grid, stream.for_slab(0), (config.n_chains,))
        self.v = self._potential(self.u)
        self._scale = grid.L / np.sqrt(grid.bracket2())

    def _potential(self, u: SpectralField) -> np.ndarray:
        if self.config.potential_off:
            return np.zeros(u.batch_shape)
        return potential(u, self.N, self.beta2, self.gamma, self.config.chi, self.config.oversample)

    def advance(self) -> np.ndarray:
        """One pCN move of every chain; returns the acceptance indicators."""
        self.step += 1
        rng = self.stream.for_slab(self.step).generator()
        xi = self._scale * unit_gaussian_coeffs(self.grid, rng, (self.config.n_chains,))
        proposal = self.u.with_coeffs(math.sqrt(1.0 - self.rho**2) * self.u.coeffs + self.rho * xi)
        v_new = self._potential(proposal)
        log_u = np.log(rng.uniform(size=self.config.n_chains))
        accept = log_u < v_new - self.v
        coeffs = np.where(accept[:, None, None], proposal.coeffs, self.u.coeffs)
        self.u = self.u.with_coeffs(coeffs)
        self.v = np.where(accept, v_new, self.v)
        return accept

    def trace(self) -> np.ndarray:
        return observable_cos(self.u, self.beta2, self.N, self.config.chi, self.config.oversample)


def _tune(chains: _PCNChains, config: ChainConfig) -> Tuple[np.ndarray, float]:
    """Pilot run; adapts ρ in windows of 50 steps when tuning is on."""
    trace = []
    accepted = []
    window: List[float] = []
    for _ in range(config.pilot_steps):
        accept = chains.advance()
        accepted.append(float(np.mean(accept)))
        window.append(float(np.mean(accept)))
        trace.append(chains.trace())
        if config.tune and not config.potential_off and len(window) == 50:
            rate = float(np.mean(window))
            chains.rho = float(np.clip(chains.rho * math.exp(rate - config.target_acceptance), 1e-3, 1.0))
            window = []
    rate = float(np.mean(accepted[len(accepted) // 2 :])) if accepted else float("nan")
    return np.asarray(trace).T, rate


def pcn_sample_gibbs(
    grid: GridSpec, N: float, beta2: float, config: ChainConfig, stream: SeededStream
) -> GibbsEnsemble:
    """Draw ``config.members`` thinned samples of ρ_{L,N} from pCN chains.

    Raises:
        ResolutionError: If 2N exceeds the Nyquist magnitude.
        RegimeError: If β² >= 4π.
    """
    grid.require_resolved(N)
    _require_regime(beta2)
    sigma = renorm.sigma_heat(grid, N, config.chi)
    gamma_value = config.gamma_factor * renorm.gamma(beta2, sigma)
    chains = _PCNChains(grid, N, beta2, gamma_value, config, stream)
    pilot_trace, pilot_rate = _tune(chains, config)
    tau = integrated_autocorrelation_time(pilot_trace[:, pilot_trace.shape[1] // 2 :]) if config.pilot_steps >= 8 else 1.0
    burn_in = config.burn_in if config.burn_in is not None else int(math.ceil(10.0 * tau))
    thin = config.thin if config.thin is not None else max(1, int(math.ceil(2.0 * tau)))
    for _ in range(burn_in):
        chains.advance()
    per_chain = int(math.ceil(config.members / config.n_chains))
    kept = []
    trace = []
    accepted = []
    for _ in range(per_chain):
        for _ in range(thin):
            accepted.append(float(np.mean(chains.advance())))
            trace.append(chains.trace())
        kept.append(chains.u.coeffs)
    samples = np.stack(kept, axis=1).reshape((-1,) + grid.shape)[: config.members]
    trace_array = np.asarray(trace).T
    acceptance = float(np.mean(accepted))
    rhat = split_rhat(trace_array)
    ess = effective_sample_size(trace_array) / thin
    warnings = []
    if rhat > RHAT_LIMIT:
        warnings.append(f"split R-hat {rhat:.3f} exceeds {RHAT_LIMIT}")
    if ess < config.min_ess:
        warnings.append(f"effective sample size {ess:.1f} below {config.min_ess}")
    if config.tune and not config.potential_off and abs(pilot_rate - config.target_acceptance) > ACCEPTANCE_BAND:
        warnings.append(f"pilot acceptance {pilot_rate:.3f} outside {config.target_acceptance} +- {ACCEPTANCE_BAND}")
    for message in warnings:
        logger.warning(f"pcn N={N:g} L={grid.L:g}: {message}")
    logger.info(f"pcn N={N:g}: rho={chains.rho:.4f} acceptance={acceptance:.3f} tau={tau:.1f} ess={ess:.0f}")
    return GibbsEnsemble(
        grid=grid,
        N=N,
        beta2=beta2,
        gamma=gamma_value,
        members=SpectralField(grid, samples),
        step_size=chains.rho,
        acceptance_rate=acceptance,
        burn_in=burn_in,
        thin=thin,
        chain_length=config.pilot_steps + burn_in + per_chain * thin,
        tau=tau,
        ess=ess,
        rhat=rhat,
        stream=stream,
        config=config,
        warnings=tuple(warnings),
    )


def importance_sampling_oracle(
    grid: GridSpec,
    N: float,
    beta2: float,
    observable: Observable,
    samples: int,
    stream: SeededStream,
    batch: int = 10000,
    gamma_factor: float = 1.0,
    chi: str = "smooth",
) -> Tuple[float, float]:
    """Self-normalised importance-sampling estimate of E_ρ[O] from GFF draws weighted by e^V.

    Returns:
        The estimate and its delta-method standard error.
    """
    grid.require_resolved(N)
    gamma_value = gamma_factor * renorm.gamma(beta2, renorm.sigma_heat(grid, N, chi))
    log_weights = []
    values = []
    for index, size in enumerate(chunk_sizes(samples, batch)):
        u = sample_gff(grid, stream.for_member(index), (size,))
        log_weights.append(potential(u, N, beta2, gamma_value, chi))
        values.append(np.asarray(observable(u), dtype=float))
    log_w = np.concatenate(log_weights)
    f = np.concatenate(values)
    weights = np.exp(log_w - np.max(log_w))
    total = float(np.sum(weights))
    estimate = float(np.sum(weights * f) / total)
    se = float(math.sqrt(np.sum(weights**2 * (f - estimate) ** 2)) / total)
    return estimate, se


@dataclass(frozen=True)
class InvarianceReport:
    """Initial-versus-evolved comparison of an ensemble on fixed observables."""

    T: float
    names: Tuple[str, ...]
    pvalues: Dict[str, float]
    shifts: Dict[str, float]
    shift_se: Dict[str, float]
    level: float = 0.01

    @property
    def threshold(self) -> float:
        """Bonferroni-corrected per-observable level."""
        return self.level / len(self.names)

    @property
    def passed(self) -> bool:
        """Every KS p-value above the threshold and every mean shift within SHIFT_LIMIT SE."""
        return all(self.pvalues[n] > self.threshold for n in self.names) and all(
            self.shift_ratio(n) <= SHIFT_LIMIT for n in self.names
        )

    def shift_ratio(self, name: str) -> float:
        shift, se = abs(self.shifts[name]), self.shift_se[name]
        if se > 0:
            return shift / se
        return math.inf if shift > 0 else 0.0

    def as_dict(self) -> dict:
        return {
            "T": self.T,
            "level": self.level,
            "threshold": self.threshold,
            "passed": self.passed,
            "pvalues": dict(self.pvalues),
            "shifts": dict(self.shifts),
            "shift_se": dict(self.shift_se),
            "shift_ratios": {n: self.shift_ratio(n) for n in self.names},
        }


def _observable_table(
    u: SpectralField, beta2: float, N: float, delta: float, modes: Sequence[Tuple[int, int]], chi: str
) -> Dict[str, np.ndarray]:
    table = {"O1": observable_cos(u, beta2, N, chi)}
    power = observable_mode_power(u, modes)
    for k, mode in enumerate(modes):
        table[f"O2{mode}"] = power[..., k]
    table["O3"] = observable_sobolev(u, delta)
    return table


def invariance_test(
    ensemble: GibbsEnsemble,
    T: float,
    config: DynamicsConfig,
    stream: SeededStream,
    delta: float = 0.1,
    modes: Sequence[Tuple[int, int]] = DEFAULT_MODES,
    level: float = 0.01,
    batch: int = 100,
    threads: int = 1,
    N: Optional[float] = None,
    beta2: Optional[float] = None,
    grid: Optional[GridSpec] = None,
) -> InvarianceReport:
    """Evolve every member to time T with fresh noise and compare laws.

    ``N``, ``beta2`` and ``grid`` name the dynamics' parameters when they are
    supplied separately; they must agree with the ensemble.

    Raises:
        ParameterError: For the noise placement or mismatched N, β².
        GridMismatchError: For a dynamics grid other than the ensemble's.
    """
    if config.placement is not Placement.NONLINEARITY:
        raise ParameterError("invariance holds for the nonlinearity-truncated dynamics only")
    if N is not None and N != ensemble.N:
        raise ParameterError(f"dynamics N={N} differs from ensemble N={ensemble.N}")
    if beta2 is not None and beta2 != ensemble.beta2:
        raise ParameterError(f"dynamics beta2={beta2} differs from ensemble beta2={ensemble.beta2}")
    if grid is not None and grid != ensemble.grid:
        raise GridMismatchError(f"dynamics grid {grid} differs from ensemble grid {ensemble.grid}")
    if ensemble.config is not None and config.chi != ensemble.config.chi:
        raise ParameterError("dynamics and ensemble use different cutoff profiles")
    initial = ensemble.members
    sizes = chunk_sizes(len(ensemble), batch)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)

    def evolve(job: Tuple[int, int, int]) -> np.ndarray:
        index, start, size = job
        u0 = initial.member(slice(start, start + size))
        if T == 0.0:
            return u0.coeffs
        record = simulate_truncated_sg(u0, ensemble.beta2, ensemble.N, T, config, stream.for_member(index))
        return record.at(-1).coeffs

    jobs = [(i, int(start), size) for i, (start, size) in enumerate(zip(starts, sizes))]
    final = SpectralField(ensemble.grid, np.concatenate(ensemble_map(evolve, jobs, threads)))
    before = _observable_table(initial, ensemble.beta2, ensemble.N, delta, modes, config.chi)
    after = _observable_table(final, ensemble.beta2, ensemble.N, delta, modes, config.chi)
    names = tuple(before)
    pvalues, shifts, shift_se = {}, {}, {}
    for name in names:
        pvalues[name] = ks_pvalue(before[name], after[name])
        shifts[name], shift_se[name] = mean_shift(before[name], after[name])
    report = InvarianceReport(T, names, pvalues, shifts, shift_se, level)
    logger.info(f"invariance T={T}: passed={report.passed} min p={min(pvalues.values()):.3g}")
    return report


def wrong_renormalization_control(
    ensemble: GibbsEnsemble,
    T: float,
    config: DynamicsConfig,
    stream: SeededStream,
    gamma_factor: float = 2.0,
    **kwargs,
) -> InvarianceReport:
    """Invariance test against dynamics whose γ is off by ``gamma_factor``.

    The ensemble keeps its own γ, so a test with any power rejects: the O1
    mean should move by more than SHIFT_LIMIT combined standard errors.
    Keyword arguments go to :func:`invariance_test`.
    """
    if gamma_factor <= 0.0 or gamma_factor == 1.0:
        raise ParameterError(f"control needs a gamma factor other than 1, got {gamma_factor}")
    wrong = replace(config, gamma_factor=config.gamma_factor * gamma_factor)
    report = invariance_test(ensemble, T, wrong, stream, **kwargs)
    logger.info(f"negative control ({gamma_factor:g}γ): O1 shift {report.shift_ratio('O1'):.2f} SE")
    return report


def equilibrate_by_dynamics(
    grid: GridSpec,
    N: float,
    beta2: float,
    members: int,
    T: float,
    config: DynamicsConfig,
    stream: SeededStream,
) -> GibbsEnsemble:
    """Approximate ρ_{L,N} by running the truncated dynamics from μ_L for time T."""
    _require_regime(beta2)
    u0 = sample_gff(grid, stream.for_experiment(f"{stream.experiment}/start"), (members,))
    record = simulate_truncated_sg(u0, beta2, N, T, config, stream)
    return GibbsEnsemble(
        grid=grid,
        N=N,
        beta2=beta2,
        gamma=float(record.integrator["gamma"]),
        members=record.at(-1),
        step_size=config.dt,
        acceptance_rate=1.0,
        burn_in=0,
        thin=1,
        chain_length=int(round(T / config.dt)),
        tau=float("nan"),
        ess=float(members),
        rhat=float("nan"),
        sampler="dynamics",
        stream=stream,
    )


def tightness_scan(
    N_list: Sequence[float],
    delta: float,
    p: float,
    samples: int,
    config: ChainConfig,
    stream: SeededStream,
    beta2: float,
    L: float = 1.0,
) -> EnsembleStats:
    """E_ρ[‖u‖^p_{C^{-δ}}] per cutoff from pCN ensembles; sampler warnings carry over.

    Raises:
        ScanError: For fewer than two cutoffs or a non-dyadic list.
    """
    check_dyadic(N_list, "N")
    chain = replace(config, members=samples)
    points = []
    warnings: List[str] = []
    for N in N_list:
        grid = scan_grid(L, N)
        ensemble = pcn_sample_gibbs(grid, N, beta2, chain, stream.for_experiment(f"{stream.experiment}/N={N:g}"))
        values = besov_norms(ensemble.members, -delta) ** p
        points.append(scan_point(N, values))
        warnings.extend(f"N={N:g}: {w}" for w in ensemble.warnings)
    fit = fit_log_slope([pt.parameter for pt in points], [pt.mean for pt in points], [pt.standard_error for pt in points])
    return EnsembleStats.from_scan("N", points, fit, warnings=warnings)


@dataclass(frozen=True)
class VolumeScanResult:
    """Global and windowed norm moments across torus sizes."""

    global_stats: EnsembleStats
    window_stats: EnsembleStats
    grids: Tuple[GridSpec, ...]
    window: float

    def as_dict(self) -> dict:
        return {
            "global": self.global_stats.as_dict(),
            "window": self.window_stats.as_dict(),
            "grids": [{"L": g.L, "n_side": g.n_side} for g in self.grids],
            "window_radius": self.window,
        }


def volume_grids(L_list: Sequence[float], N: float, points_per_unit: Optional[int] = None) -> Tuple[GridSpec, ...]:
    """Grids with a common physical spacing for every L.

    Raises:
        ScanError: For fewer than two sizes.
        ConfigError: If the spacing drifts by more than 1% across the list.
    """
    if len(L_list) < 2:
        raise ScanError(f"volume scan needs at least two torus sizes, got {list(L_list)}")
    base = points_per_unit or scan_grid(1.0, N).n_side
    grids = []
    for L in L_list:
        n_side = 4
        while n_side < base * L:
            n_side *= 2
        grids.append(GridSpec(float(L), n_side))
    spacings = np.array([g.spacing for g in grids])
    if np.max(np.abs(spacings / spacings[0] - 1.0)) > 0.01:
        raise ConfigError(f"grid spacing drifts across the scan: {spacings.tolist()}", field="L_list")
    for grid in grids:
        grid.require_resolved(N)
    return tuple(grids)


def volume_scan(
    L_list: Sequence[float],
    N: float,
    delta: float,
    p: float,
    samples: int,
    stream: SeededStream,
    window: float = 1.0,
    field_kind: str = "psi",
    beta2: Optional[float] = None,
    points_per_unit: Optional[int] = None,
    batch: int = 32,
    threads: int = 1,
) -> VolumeScanResult:
    """E[‖F_{L,N}‖^p_{C^{-δ}}] and E[‖χ_B F_{L,N}‖^p_{C^{-δ}}] per torus size.

    F is the stationary Ψ_{L,N} (``field_kind="psi"``) or the chaos Θ_{L,N}
    (``"theta"``, needs β²). χ_B equals 1 on the centred ball of radius
    ``window`` and vanishes beyond twice that radius.
    """
    if field_kind not in ("psi", "theta"):
        raise ConfigError(f"unknown field kind {field_kind!r}", field="scan.kind")
    if field_kind == "theta" and beta2 is None:
        raise ConfigError("the chaos scan needs beta2", field="beta2")
    grids = volume_grids(L_list, N, points_per_unit)
    global_points = []
    window_points = []
    for grid in grids:
        x1, x2 = grid.points(centered=True)
        if field_kind == "theta":
            x1, x2 = grid.refined(2).points(centered=True)
        bump = window_bump(np.hypot(x1, x2), 2.0 * window)
        base = stream.for_experiment(f"{stream.experiment}/L={grid.L:g}")

        def chunk(job: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
            index, size = job
            psi = sample_gff(grid, base.for_member(index), (size,))
            if field_kind == "theta":
                values = build_theta(psi, beta2, N).values
            else:
                values = psi.with_coeffs(cutoff_symbol(grid, N) * psi.coeffs)
            localized = forward_transform(bump * inverse_transform(values), values.grid, is_real=values.is_real)
            return besov_norms(values, -delta) ** p, besov_norms(localized, -delta) ** p

        jobs = list(enumerate(chunk_sizes(samples, batch)))
        results = ensemble_map(chunk, jobs, threads)
        global_points.append(scan_point(grid.L, np.concatenate([r[0] for r in results])))
        window_points.append(scan_point(grid.L, np.concatenate([r[1] for r in results])))
        logger.info(f"volume scan L={grid.L:g}: global {global_points[-1].mean:.4g} window {window_points[-1].mean:.4g}")

    def stats(points):
        fit = fit_log_slope([pt.parameter for pt in points], [pt.mean for pt in points], [pt.standard_error for pt in points])
        return EnsembleStats.from_scan("L", points, fit)

    return VolumeScanResult(stats(global_points), stats(window_points), grids, window)


def weighted_tightness_scan(
    L_list: Sequence[float],
    N: float,
    delta: float,
    p: float,
    lam: float,
    M: float,
    samples: int,
    config: ChainConfig,
    stream: SeededStream,
    beta2: float,
    points_per_unit: Optional[int] = None,
) -> EnsembleStats:
    """E_ρ[‖u‖^p_{C^{-δ}_{λ,M}}] per torus size; shells cover each whole torus."""
    grids = volume_grids(L_list, N, points_per_unit)
    chain = replace(config, members=samples)
    points = []
    warnings: List[str] = []
    for grid in grids:
        ensemble = pcn_sample_gibbs(
            grid, N, beta2, chain, stream.for_experiment(f"{stream.experiment}/L={grid.L:g}")
        )
        ell_max = covering_shells(grid, M)
        values = [
            weighted_besov_norm(ensemble.member(i), -delta, lam, M, ell_max).value ** p for i in range(len(ensemble))
        ]
        points.append(scan_point(grid.L, np.asarray(values)))
        warnings.extend(f"L={grid.L:g}: {w}" for w in ensemble.warnings)
    fit = fit_log_slope([pt.parameter for pt in points], [pt.mean for pt in points], [pt.standard_error for pt in points])
    return EnsembleStats.from_scan("L", points, fit, warnings=warnings)

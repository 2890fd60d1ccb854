"""Imaginary Gaussian multiplicative chaos Θ = γe^{iκβΨ_N}.

The exponential is taken pointwise on a 2× oversampled grid, so a
:class:`ChaosField` lives on ``grid.refined(oversample)`` where |Θ| = γ holds at
every sample point. The scans below estimate its regularity threshold and the
decay of the cosine pairing by Monte Carlo over free-field samples.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from sine_gordon_lab import renorm
from sine_gordon_lab.errors import ParameterError, PreconditionError, ProvenanceError, ScanError
from sine_gordon_lab.fourier import (
    ChiProfile,
    GridSpec,
    SpectralField,
    cutoff_symbol,
    forward_transform,
    inverse_transform,
)
from sine_gordon_lab.noise import SeededStream, evolve_heat_convolution, sample_gff, sample_white_noise_slab
from sine_gordon_lab.norms import besov_norms
from sine_gordon_lab.parallel import chunk_sizes, ensemble_map
from sine_gordon_lab.stats import EnsembleStats, fit_log_slope, ks_pvalue, linear_fit, scan_point

logger = logging.getLogger(__name__)

PhiFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ChaosField:
    """Θ together with the parameters it was built from.

    Attributes:
        grid: Grid of the underlying Ψ.
        values: Θ on the oversampled grid (complex).
        beta2: β².
        N: Frequency cutoff of Ψ_N.
        sigma: Variance of Ψ_N(x) used for the renormalisation.
        gamma: Renormalisation constant e^{β²σ/2}.
        kappa: +1 or -1.
    """

    grid: GridSpec
    values: SpectralField
    beta2: float
    N: float
    sigma: float
    gamma: float
    kappa: int = 1

    @property
    def oversample(self) -> int:
        return self.values.grid.n_side // self.grid.n_side

    def physical(self) -> np.ndarray:
        return inverse_transform(self.values)

    def conjugate(self) -> "ChaosField":
        return ChaosField(
            self.grid, self.values.conjugate(), self.beta2, self.N, self.sigma, self.gamma, -self.kappa
        )

    def member(self, index) -> "ChaosField":
        return ChaosField(
            self.grid, self.values.member(index), self.beta2, self.N, self.sigma, self.gamma, self.kappa
        )


def _exponentiate(
    psi_n: SpectralField, beta2: float, N: float, sigma: float, gamma_value: float, kappa: int, oversample: int
) -> ChaosField:
    if kappa not in (1, -1):
        raise ParameterError(f"kappa must be +1 or -1, got {kappa}")
    if abs(math.log(gamma_value) - 0.5 * beta2 * sigma) > 1e-10:
        raise ProvenanceError(
            f"gamma={gamma_value!r} does not match exp(beta2*sigma/2) for beta2={beta2}, sigma={sigma}"
        )
    fine = psi_n.grid.refined(oversample)
    phase = inverse_transform(psi_n, oversample=oversample)
    theta = gamma_value * np.exp(1j * kappa * math.sqrt(beta2) * phase)
    values = forward_transform(theta, fine, is_real=False)
    return ChaosField(psi_n.grid, values, beta2, N, sigma, gamma_value, kappa)


def build_theta(
    psi: SpectralField,
    beta2: float,
    N: float,
    gamma: Optional[float] = None,
    kappa: int = 1,
    sigma: Optional[float] = None,
    chi: ChiProfile = "smooth",
    truncated: bool = False,
    oversample: int = 2,
) -> ChaosField:
    """Build Θ^κ = γe^{iκβΠ_NΨ}.

    Args:
        psi: Real field Ψ (any batch shape).
        beta2: β² > 0.
        N: Cutoff; Π_N is applied unless ``truncated`` says Ψ already is Π_NΨ.
        gamma: Renormalisation constant; computed from σ when omitted.
        kappa: Sign of the exponent.
        sigma: Variance of Ψ_N(x); defaults to :func:`renorm.sigma_heat`.
        chi: Cutoff profile.
        truncated: Whether ``psi`` is already frequency truncated.
        oversample: Oversampling factor for the pointwise exponential.

    Raises:
        PreconditionError: If ``psi`` is not real.
        ProvenanceError: If |log γ - β²σ/2| > 1e-10.
    """
    if not psi.is_real:
        raise PreconditionError("build_theta needs a real field")
    if sigma is None:
        sigma = renorm.sigma_heat(psi.grid, N, chi)
    if gamma is None:
        gamma = renorm.gamma(beta2, sigma)
    psi_n = psi if truncated else psi.with_coeffs(cutoff_symbol(psi.grid, N, chi) * psi.coeffs)
    return _exponentiate(psi_n, beta2, N, sigma, gamma, kappa, oversample)


def build_theta_wave(
    psi_wave: SpectralField,
    beta2: float,
    N: float,
    t: float,
    kappa: int = 1,
    chi: ChiProfile = "smooth",
    truncated: bool = True,
    oversample: int = 2,
) -> ChaosField:
    """Θ^wave(t) = γ^wave(t)e^{iκβΨ^wave_N(t)} for a wave convolution started at time 0."""
    sigma = renorm.sigma_wave(psi_wave.grid, N, t, chi)
    return build_theta(
        psi_wave, beta2, N, renorm.gamma(beta2, sigma), kappa, sigma, chi, truncated, oversample
    )


def truncated_covariance(
    grid: GridSpec, N: float, r: np.ndarray, chi: ChiProfile = "smooth"
) -> np.ndarray:
    """C_N(r) = (1/4π²L²)Σ χ_N²(n)e^{in·r}/⟨n⟩² for displacements ``r`` of shape (..., 2)."""
    r = np.asarray(r, dtype=float)
    weights = cutoff_symbol(grid, N, chi) ** 2 / grid.bracket2()
    n1, n2 = grid.wavenumbers()
    phase = r[..., 0, None, None] * n1 + r[..., 1, None, None] * n2
    return np.sum(weights * np.cos(phase), axis=(-2, -1)) / (4.0 * math.pi**2 * grid.L**2)


def covariance_on_grid(grid: GridSpec, N: float, chi: ChiProfile = "smooth", oversample: int = 1) -> np.ndarray:
    """C_N evaluated at every displacement of the (oversampled) grid."""
    coeffs = cutoff_symbol(grid, N, chi) ** 2 / (2.0 * math.pi * grid.bracket2())
    return inverse_transform(SpectralField(grid, coeffs), oversample=oversample)


def theta_covariance_oracle(
    grid: GridSpec, N: float, beta2: float, r: np.ndarray, chi: ChiProfile = "smooth"
) -> np.ndarray:
    """Exact E[Θ(x)·conj(Θ(x+r))] = exp(β²C_N(r))."""
    return np.exp(beta2 * truncated_covariance(grid, N, r, chi)).astype(np.complex128)


def scan_grid(L: float, N: float) -> GridSpec:
    """Smallest power-of-two grid on T²_L that resolves the cutoff N."""
    n_side = 4
    while n_side / (2.0 * L) < 2.0 * N:
        n_side *= 2
    return GridSpec(L, n_side)


def check_dyadic(values: Sequence[float], name: str) -> None:
    if len(values) < 2:
        raise ScanError(f"{name} scan needs at least two values, got {list(values)}")
    ratios = np.asarray(values[1:], dtype=float) / np.asarray(values[:-1], dtype=float)
    if not np.allclose(ratios, 2.0):
        raise ScanError(f"{name} values must be dyadic, got {list(values)}")


def _stationary_psi_path(
    grid: GridSpec, stream: SeededStream, size: int, n_times: int, T: float
) -> List[SpectralField]:
    psi = sample_gff(grid, stream.for_slab(0), (size,))
    path = [psi]
    if n_times > 1:
        dt = T / (n_times - 1)
        for j in range(1, n_times):
            slab = sample_white_noise_slab(grid, dt, stream.for_slab(j), (size,))
            psi = evolve_heat_convolution(psi, slab)
            path.append(psi)
    return path


def regularity_scan(
    beta2: float,
    alpha: float,
    N_list: Sequence[float],
    samples: int,
    stream: SeededStream,
    L: float = 1.0,
    n_times: int = 1,
    T: float = 1.0,
    batch: int = 16,
    threads: int = 1,
    chi: ChiProfile = "smooth",
) -> EnsembleStats:
    """Median of ‖Θ_{L,N}‖_{C^{-α}} across a dyadic list of cutoffs.

    With ``n_times`` > 1 the stationary Ψ is evolved over [0, T] and the sup
    over the equally spaced sample times is recorded. The slope is a pooled
    regression of log-norm on log N over all members.

    Raises:
        ScanError: For fewer than two cutoffs or a non-dyadic list.
        ParameterError: For α exactly at the threshold β²/4π.
    """
    check_dyadic(N_list, "N")
    if math.isclose(alpha, beta2 / (4.0 * math.pi)):
        raise ParameterError(f"alpha={alpha} sits on the threshold beta2/4pi")
    points = []
    log_n: List[float] = []
    log_norm: List[float] = []
    for N in N_list:
        grid = scan_grid(L, N)
        sigma = renorm.sigma_heat(grid, N, chi)
        gamma_value = renorm.gamma(beta2, sigma)
        base = stream.for_experiment(f"{stream.experiment}/N={N:g}")

        def chunk_norms(job: Tuple[int, int]) -> np.ndarray:
            index, size = job
            path = _stationary_psi_path(grid, base.for_member(index), size, n_times, T)
            norms = [
                besov_norms(build_theta(psi, beta2, N, gamma_value, 1, sigma, chi).values, -alpha, oversample=1)
                for psi in path
            ]
            return np.max(np.stack(norms), axis=0)

        jobs = list(enumerate(chunk_sizes(samples, batch)))
        norms = np.concatenate(ensemble_map(chunk_norms, jobs, threads))
        points.append(scan_point(N, norms))
        log_n.extend([math.log(N)] * norms.size)
        log_norm.extend(np.log(norms).tolist())
        logger.info(f"regularity scan N={N:g}: median {points[-1].median:.4g}")
    fit = linear_fit(log_n, log_norm)
    return EnsembleStats.from_scan("N", points, fit)


def cos_pairings(
    grid: GridSpec, beta2: float, phi: PhiFunction, N: float, u: SpectralField, oversample: int = 2
) -> np.ndarray:
    """⟨cos(βΠ_N u), φ⟩ for every member of ``u`` (quadrature on the oversampled grid)."""
    fine = grid.refined(oversample)
    x1, x2 = fine.points()
    weight = np.asarray(phi(x1, x2), dtype=float)
    u_n = u.with_coeffs(cutoff_symbol(grid, N) * u.coeffs)
    values = np.cos(math.sqrt(beta2) * inverse_transform(u_n, oversample=oversample))
    return np.sum(values * weight, axis=(-2, -1)) * fine.spacing**2


def cos_pairing_oracle(
    grid: GridSpec, N: float, beta2: float, phi: PhiFunction, chi: ChiProfile = "smooth", oversample: int = 2
) -> float:
    """Exact E[⟨cos(βΠ_N u), φ⟩²] = e^{-β²σ}∫∫φ(x)φ(y)cosh(β²C_N(x-y)) dx dy.

    Uses the same quadrature as :func:`cos_pairings`, so it is the exact mean of
    the Monte Carlo estimator.
    """
    fine = grid.refined(oversample)
    x1, x2 = fine.points()
    weight = np.asarray(phi(x1, x2), dtype=float)
    kernel = np.cosh(beta2 * covariance_on_grid(grid, N, chi, oversample))
    convolved = np.fft.ifft2(np.fft.fft2(kernel) * np.fft.fft2(weight)).real * fine.spacing**2
    sigma = renorm.sigma_heat(grid, N, chi)
    return float(math.exp(-beta2 * sigma) * np.sum(weight * convolved) * fine.spacing**2)


def cos_pairing_decay(
    grid: GridSpec,
    beta2: float,
    phi: PhiFunction,
    N_list: Sequence[float],
    samples: int,
    stream: SeededStream,
    batch: int = 64,
    threads: int = 1,
) -> EnsembleStats:
    """E_μ[⟨cos(βΠ_N u), φ⟩²] per cutoff and its fitted log-log slope.

    The slope is fitted to the per-N means weighted by their standard errors.
    """
    if len(N_list) < 2:
        raise ScanError(f"N scan needs at least two values, got {list(N_list)}")
    for N in N_list:
        grid.require_resolved(N)
    points = []
    for N in N_list:
        base = stream.for_experiment(f"{stream.experiment}/N={N:g}")

        def chunk_pairings(job: Tuple[int, int]) -> np.ndarray:
            index, size = job
            u = sample_gff(grid, base.for_member(index), (size,))
            return cos_pairings(grid, beta2, phi, N, u) ** 2

        jobs = list(enumerate(chunk_sizes(samples, batch)))
        squares = np.concatenate(ensemble_map(chunk_pairings, jobs, threads))
        points.append(scan_point(N, squares))
    fit = fit_log_slope(
        [p.parameter for p in points], [p.mean for p in points], [p.standard_error for p in points]
    )
    return EnsembleStats.from_scan("N", points, fit)


def cos_decay_bound(beta2: float) -> float:
    """Upper bound -β²/4π on the log-log slope of E[⟨cos(βΠ_N u), φ⟩²]."""
    return -beta2 / (4.0 * math.pi)


def violates_decay_bound(slope: float, slope_se: Optional[float], beta2: float) -> bool:
    """True when ``slope`` lies above the bound by more than one standard error.

    An unknown or NaN error counts as zero.
    """
    se = slope_se if slope_se is not None and math.isfinite(slope_se) else 0.0
    return slope > cos_decay_bound(beta2) + se


def law_symmetry_check(
    grid: GridSpec, N: float, beta2: float, alpha: float, samples: int, stream: SeededStream
) -> float:
    """KS p-value comparing ‖Θ(-Ψ)‖_{C^{-α}} with ‖conj Θ(Ψ')‖_{C^{-α}}, Ψ and Ψ' independent."""
    first = sample_gff(grid, stream.for_member(0), (samples,))
    second = sample_gff(grid, stream.for_member(1), (samples,))
    negated = build_theta(first.scaled(-1.0), beta2, N)
    conjugated = build_theta(second, beta2, N).conjugate()
    a = besov_norms(negated.values, -alpha, oversample=1)
    b = besov_norms(conjugated.values, -alpha, oversample=1)
    return ks_pvalue(a, b)

"""Norm estimators on the discrete torus.

Every field here is a trigonometric polynomial, so the L^∞ norms are grid
maxima taken on a 2× oversampled grid. The Besov norms use the
Littlewood-Paley blocks of :mod:`sine_gordon_lab.fourier`; the weighted norms
localise with an M-adic partition of unity centred at the origin.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special

from sine_gordon_lab.errors import ParameterError, TruncationError
from sine_gordon_lab.fourier import (
    GridSpec,
    SpectralField,
    forward_transform,
    inverse_transform,
    lp_kmax,
    lp_symbol,
    smooth_step,
)
from sine_gordon_lab.trajectory import TrajectoryRecord

logger = logging.getLogger(__name__)

INF = math.inf
PARTITION_CONSTANT = 16.0

NormValue = Union[float, np.ndarray]


@dataclass(frozen=True)
class BesovReport:
    s: float
    p: float
    q: float
    blocks: Dict[int, float]
    value: float
    k_max: int

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "p": self.p,
            "q": self.q,
            "blocks": {str(k): v for k, v in self.blocks.items()},
            "value": self.value,
            "k_max": self.k_max,
        }


@dataclass(frozen=True)
class WeightedNormReport:
    s: float
    lam: float
    M: float
    shells: Dict[int, float]
    ell_max: int
    value: float

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "lam": self.lam,
            "M": self.M,
            "shells": {str(k): v for k, v in self.shells.items()},
            "ell_max": self.ell_max,
            "value": self.value,
        }


def lp_norm(values: np.ndarray, grid: GridSpec, p: float = INF) -> np.ndarray:
    """L^p norm over the last two axes of samples on ``grid`` (Riemann sum)."""
    magnitude = np.abs(values)
    if p == INF:
        return np.max(magnitude, axis=(-2, -1))
    if p <= 0:
        raise ParameterError(f"p must be positive, got {p}")
    cell = grid.spacing**2
    return (np.sum(magnitude**p, axis=(-2, -1)) * cell) ** (1.0 / p)


def _physical(field: SpectralField, coeffs: np.ndarray, oversample: int) -> np.ndarray:
    return inverse_transform(field.with_coeffs(coeffs), oversample=oversample)


def block_norms(field: SpectralField, p: float = INF, oversample: int = 2, k_max: Optional[int] = None) -> np.ndarray:
    """‖P_k f‖_{L^p} for k = 0..k_max, stacked on a new last axis."""
    grid = field.grid
    k_max = lp_kmax(grid) if k_max is None else k_max
    fine = grid.refined(oversample)
    values = []
    for k in range(k_max + 1):
        block = field.coeffs * lp_symbol(grid, k)
        values.append(lp_norm(_physical(field, block, oversample), fine, p))
    return np.stack(values, axis=-1)


def _aggregate(weighted: np.ndarray, q: float) -> np.ndarray:
    if q == INF:
        return np.max(weighted, axis=-1)
    return np.sum(weighted**q, axis=-1) ** (1.0 / q)


def besov_norms(
    field: SpectralField, s: float, p: float = INF, q: float = INF, oversample: int = 2
) -> np.ndarray:
    """B^s_{p,q} norms of every member of a batched field."""
    blocks = block_norms(field, p, oversample)
    weights = 2.0 ** (s * np.arange(blocks.shape[-1]))
    return _aggregate(blocks * weights, q)


def besov_norm(field: SpectralField, s: float, p: float = INF, q: float = INF, oversample: int = 2) -> BesovReport:
    """B^s_{p,q} norm of a single field with per-block detail.

    C^s is the case p = q = ∞. Blocks run up to :func:`lp_kmax`, which covers
    the corner modes of the grid.
    """
    if field.batch_shape:
        raise ParameterError("besov_norm expects a single field; use besov_norms for batches")
    blocks = block_norms(field, p, oversample)
    weighted = blocks * 2.0 ** (s * np.arange(blocks.size))
    return BesovReport(
        s=s,
        p=p,
        q=q,
        blocks={k: float(v) for k, v in enumerate(weighted)},
        value=float(_aggregate(weighted, q)),
        k_max=blocks.size - 1,
    )


def sobolev_norm(field: SpectralField, s: float, p: float = 2.0, oversample: int = 2) -> np.ndarray:
    """‖⟨∇⟩^s f‖_{L^p}; exact from the coefficients when p = 2."""
    symbol = field.grid.bracket2() ** (0.5 * s)
    if p == 2.0:
        return np.sqrt(np.sum(np.abs(symbol * field.coeffs) ** 2, axis=(-2, -1))) / field.grid.L
    values = _physical(field, symbol * field.coeffs, oversample)
    return lp_norm(values, field.grid.refined(oversample), p)


def heat_smoothed(field: SpectralField, t: float) -> SpectralField:
    return field.with_coeffs(np.exp(-t * field.grid.bracket2()) * field.coeffs)


def schauder_ratios(field: SpectralField, s1: float, s2: float, times: Sequence[float]) -> np.ndarray:
    """‖e^{t(Δ-1)}f‖_{C^{s2}} / (min(1,t)^{(s1-s2)/2}‖f‖_{C^{s1}}) for each t."""
    base = besov_norm(field, s1).value
    ratios = []
    for t in times:
        smoothed = besov_norm(heat_smoothed(field, t), s2).value
        ratios.append(smoothed / (min(1.0, t) ** (0.5 * (s1 - s2)) * base))
    return np.asarray(ratios)


def _psi(r: np.ndarray, M: float) -> np.ndarray:
    inner, outer = 0.75 * M, 4.0 * M / 3.0
    return 1.0 - smooth_step((r - inner) / (outer - inner))


def partition_profile(r: np.ndarray, M: float, ell: int) -> np.ndarray:
    """Radial profile of the ℓ-th M-adic partition function."""
    if ell == 0:
        return _psi(r, M)
    return _psi(r / M**ell, M) - _psi(r / M ** (ell - 1), M)


def m_adic_partition(grid: GridSpec, M: float, ell_max: int) -> np.ndarray:
    """Partition functions χ^M_0..χ^M_ℓmax sampled on the centred grid, shape (ℓmax+1, n, n)."""
    if not M > 1.0:
        raise ParameterError(f"M must exceed 1, got {M}")
    x1, x2 = grid.points(centered=True)
    r = np.hypot(x1, x2)
    return np.stack([partition_profile(r, M, ell) for ell in range(ell_max + 1)])


def partition_derivative_bound(M: float, ell_max: int = 3, samples: int = 20001) -> float:
    """max_ℓ (‖∇χ^M_ℓ‖_∞ + ‖Δχ^M_ℓ‖_∞) from the radial profiles."""
    bound = 0.0
    for ell in range(ell_max + 1):
        r = np.linspace(0.0, 2.0 * M ** (ell + 1), samples)
        profile = partition_profile(r, M, ell)
        first = np.gradient(profile, r)
        second = np.gradient(first, r)
        laplacian = second[1:] + first[1:] / r[1:]
        bound = max(bound, float(np.max(np.abs(first))) + float(np.max(np.abs(laplacian))))
    return bound


def covering_shells(grid: GridSpec, M: float) -> int:
    """Smallest ℓmax whose shells cover the whole centred torus."""
    if not M > 1.0:
        raise ParameterError(f"M must exceed 1, got {M}")
    radius = math.sqrt(2.0) * math.pi * grid.L
    ell = 0
    while 0.75 * M ** (ell + 1) < radius:
        ell += 1
    return ell


def _check_support(values: np.ndarray, grid: GridSpec, M: float, ell_max: int) -> None:
    x1, x2 = grid.points(centered=True)
    coverage = _psi(np.hypot(x1, x2) / M**ell_max, M)
    outside = coverage < 1.0 - 1e-12
    if not np.any(outside):
        return
    scale = float(np.max(np.abs(values), initial=0.0))
    escaped = float(np.max(np.abs(values[..., outside]), initial=0.0))
    if escaped > 1e-10 * max(scale, 1e-300):
        raise TruncationError(
            f"field reaches {escaped:.3e} outside the shells up to {ell_max} (M={M})"
        )


def _shell_fields(field: SpectralField, M: float, ell_max: int):
    values = inverse_transform(field)
    _check_support(values, field.grid, M, ell_max)
    partition = m_adic_partition(field.grid, M, ell_max)
    for ell in range(ell_max + 1):
        if not np.any(partition[ell]):
            yield ell, None
            continue
        yield ell, forward_transform(partition[ell] * values, field.grid, is_real=field.is_real)


def weighted_besov_norm(
    field: SpectralField, s: float, lam: float, M: float, ell_max: int
) -> WeightedNormReport:
    """Σ_{ℓ<=ℓmax} e^{-λℓ}‖χ^M_ℓ v‖_{C^s}.

    Raises:
        TruncationError: If the field does not vanish outside shell ``ell_max``.
    """
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    shells = {}
    for ell, localized in _shell_fields(field, M, ell_max):
        norm = 0.0 if localized is None else besov_norm(localized, s).value
        shells[ell] = math.exp(-lam * ell) * norm
    return WeightedNormReport(s=s, lam=lam, M=M, shells=shells, ell_max=ell_max, value=sum(shells.values()))


def _scalar_or_array(value) -> NormValue:
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def _window(trajectory: TrajectoryRecord, T: float) -> np.ndarray:
    if trajectory.fields is None or len(trajectory) == 0:
        raise ParameterError("trajectory holds no fields")
    mask = (trajectory.times > 0.0) & (trajectory.times <= T * (1.0 + 1e-12))
    if not np.any(mask):
        raise ParameterError(f"trajectory has no samples in (0, {T}]")
    return mask


def x_norm(trajectory: TrajectoryRecord, s0: float, s: float, T: float) -> NormValue:
    """sup_{0<t<=T} e^{t}·min(1,t)^{(s+s0)/2}·‖v(t)‖_{C^s} over the sampled times."""
    mask = _window(trajectory, T)
    times = trajectory.times[mask]
    fields = trajectory.fields.member(mask)
    norms = besov_norms(fields, s)
    weights = np.exp(times) * np.minimum(1.0, times) ** (0.5 * (s + s0))
    weights = weights.reshape((-1,) + (1,) * (norms.ndim - 1))
    return _scalar_or_array(np.max(weights * norms, axis=0))


def _localized_trajectory(trajectory: TrajectoryRecord, profile: np.ndarray, mask: np.ndarray) -> TrajectoryRecord:
    fields = trajectory.fields.member(mask)
    values = inverse_transform(fields)
    localized = forward_transform(profile * values, fields.grid, is_real=fields.is_real)
    return TrajectoryRecord(trajectory.times[mask], localized)


def y_norm(
    trajectory: TrajectoryRecord, s0: float, s: float, T: float, lam: float, M: float, ell_max: int
) -> NormValue:
    """Σ_ℓ e^{-λℓ}·X-norm of χ^M_ℓ v."""
    mask = _window(trajectory, T)
    fields = trajectory.fields.member(mask)
    _check_support(inverse_transform(fields), fields.grid, M, ell_max)
    partition = m_adic_partition(fields.grid, M, ell_max)
    total = 0.0
    for ell in range(ell_max + 1):
        if not np.any(partition[ell]):
            continue
        shell = _localized_trajectory(trajectory, partition[ell], mask)
        total = total + math.exp(-lam * ell) * x_norm(shell, s0, s, T)
    return _scalar_or_array(total)


def z_norm(
    trajectory: TrajectoryRecord, s: float, T: float, lam: float, M: float, A: float, ell_max: int
) -> NormValue:
    """Σ_ℓ e^{-λℓ}·(sup_{t<=T}‖χ^M_ℓ Θ(t)‖_{C^s})^A for a chaos trajectory."""
    if trajectory.fields is None:
        raise ParameterError("trajectory holds no fields")
    mask = trajectory.times <= T * (1.0 + 1e-12)
    fields = trajectory.fields.member(mask)
    values = inverse_transform(fields)
    _check_support(values, fields.grid, M, ell_max)
    partition = m_adic_partition(fields.grid, M, ell_max)
    total = 0.0
    for ell in range(ell_max + 1):
        if not np.any(partition[ell]):
            continue
        localized = forward_transform(partition[ell] * values, fields.grid, is_real=fields.is_real)
        total = total + math.exp(-lam * ell) * np.max(besov_norms(localized, s), axis=0) ** A
    return _scalar_or_array(total)


def y_z_norms(
    trajectory: TrajectoryRecord,
    chaos_trajectory: TrajectoryRecord,
    s0: float,
    s: float,
    T: float,
    lam: float,
    M: float,
    A: float,
    ell_max: int,
    theta_s: Optional[float] = None,
) -> Tuple[NormValue, NormValue]:
    """Y-norm of a remainder trajectory and Z-norm of the chaos driving it.

    ``theta_s`` is the regularity used for Θ and defaults to ``s``.
    """
    y = y_norm(trajectory, s0, s, T, lam, M, ell_max)
    z = z_norm(chaos_trajectory, s if theta_s is None else theta_s, T, lam, M, A, ell_max)
    return y, z


def bessel_kernel(r: np.ndarray, alpha: float) -> np.ndarray:
    """Whole-plane kernel of ⟨∇⟩^{-α}: (r/2)^{α/2-1}K_{1-α/2}(r) / (2πΓ(α/2))."""
    r = np.asarray(r, dtype=float)
    return (0.5 * r) ** (0.5 * alpha - 1.0) * special.kv(1.0 - 0.5 * alpha, r) / (
        2.0 * math.pi * special.gamma(0.5 * alpha)
    )


def window_bump(r: np.ndarray, A: float) -> np.ndarray:
    """φ_A: 1 on |x| <= A/2 and 0 from |x| = A on."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - 0.5 * A) / (0.5 * A))


@lru_cache(maxsize=32)
def _bessel_symbol(L: float, n_side: int, alpha: float, A: float) -> np.ndarray:
    grid = GridSpec(L, n_side)
    rho = np.sqrt(grid.mode_norm2())
    r = np.linspace(0.5 * A, 0.5 * A + 40.0, 16001)
    tail = (1.0 - window_bump(r, A)) * bessel_kernel(r, alpha) * r
    table_rho = np.linspace(0.0, float(rho.max()) + 1e-9, 2049)
    transform = np.empty_like(table_rho)
    # chunked to bound the size of the (rho, r) intermediate
    for start in range(0, table_rho.size, 256):
        chunk = table_rho[start : start + 256]
        transform[start : start + 256] = 2.0 * math.pi * integrate.trapezoid(
            tail * special.j0(chunk[:, None] * r[None, :]), r, axis=1
        )
    symbol = (1.0 + rho**2) ** (-0.5 * alpha) - np.interp(rho, table_rho, transform)
    symbol.setflags(write=False)
    return symbol


def bessel_kernel_symbol(grid: GridSpec, alpha: float, A: float) -> np.ndarray:
    """Lattice symbol of convolution with φ_A·J_α (periodised)."""
    return _bessel_symbol(grid.L, grid.n_side, float(alpha), float(A))


def bessel_local_norm(
    field: SpectralField, alpha: float, p: float = INF, A: float = 10.0, A_min: float = 10.0, oversample: int = 2
) -> np.ndarray:
    """‖(φ_A J_α) * f‖_{L^p}.

    Raises:
        ParameterError: For α outside (0, 2) or A below ``A_min``.
    """
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    if A < A_min:
        raise ParameterError(f"window A={A} is below the minimum {A_min}")
    symbol = bessel_kernel_symbol(field.grid, alpha, A)
    values = _physical(field, symbol * field.coeffs, oversample)
    return lp_norm(values, field.grid.refined(oversample), p)

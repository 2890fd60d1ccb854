"""Discrete torus geometry and Fourier conventions.

The torus T²_L = (R/2πLZ)² is sampled on an ``n_side × n_side`` grid and fields
are stored as Fourier coefficients on the dual lattice Z²_L = (Z/L)² in numpy
FFT ordering. The transform convention is

    f̂(n) = (1/2π) ∫ f(x) e^{-in·x} dx,      f(x) = (1/2πL²) Σ_n f̂(n) e^{in·x},

so a coefficient is a grid-independent physical quantity: refining the grid
only appends modes. All FFT cores are unnormalised and the prefactors above are
applied explicitly.

Example:
    ```python
    from sine_gordon_lab.fourier import GridSpec, MultiplierSpec, apply_multiplier
    from sine_gordon_lab.fourier import forward_transform

    grid = GridSpec(L=1.0, n_side=64)
    x1, x2 = grid.points()
    field = forward_transform(np.cos(x1), grid)
    smoothed = apply_multiplier(field, MultiplierSpec.heat_semigroup(0.5))
    ```
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import integrate, special

from sine_gordon_lab.errors import (
    GridMismatchError,
    ParameterError,
    PreconditionError,
    ResolutionError,
    ShapeError,
)

logger = logging.getLogger(__name__)

ETA_INNER = 5.0 / 4.0
ETA_OUTER = 8.0 / 5.0
CHI_INNER = 0.5
CHI_OUTER = 2.0
CHI_PROFILES = ("smooth", "sharp", "physical_bump")


@dataclass(frozen=True)
class GridSpec:
    """Square grid on the torus of circumference 2πL.

    Attributes:
        L: Torus parameter; the dual lattice spacing is 1/L.
        n_side: Points per dimension, a power of two no smaller than 4.
    """

    L: float
    n_side: int

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ParameterError(f"L must be positive and finite, got {self.L}")
        n = self.n_side
        if n < 4 or n & (n - 1):
            raise ParameterError(f"n_side must be a power of two >= 4, got {n}")

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi * self.L / self.n_side

    @property
    def nyquist(self) -> float:
        return self.n_side / (2.0 * self.L)

    @property
    def area(self) -> float:
        return (2.0 * math.pi * self.L) ** 2

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_side, self.n_side)

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same torus with ``factor`` times as many points per side."""
        return GridSpec(self.L, self.n_side * factor)

    def wavenumbers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Dual lattice components (n1, n2) in FFT order, 'ij' indexing."""
        return _wavenumbers(self.L, self.n_side)

    def mode_norm2(self) -> np.ndarray:
        """|n|² on every represented mode."""
        return _mode_norm2(self.L, self.n_side)

    def bracket2(self) -> np.ndarray:
        """⟨n⟩² = 1 + |n|²."""
        return 1.0 + self.mode_norm2()

    def points(self, centered: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        """Physical grid coordinates, on [0, 2πL) or on [-πL, πL) if ``centered``."""
        x = self.spacing * np.arange(self.n_side)
        if centered:
            x = np.where(x >= math.pi * self.L, x - 2.0 * math.pi * self.L, x)
        return np.meshgrid(x, x, indexing="ij")

    def resolves(self, N: float) -> bool:
        return 2.0 * N <= self.nyquist * (1.0 + 1e-12)

    def require_resolved(self, N: float) -> None:
        """Raise ResolutionError unless the cutoff ``N`` satisfies 2N <= Nyquist."""
        if not self.resolves(N):
            raise ResolutionError(
                f"cutoff N={N} needs 2N <= Nyquist={self.nyquist:g} "
                f"(L={self.L}, n_side={self.n_side})"
            )

    def require_same(self, other: "GridSpec") -> None:
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")


@lru_cache(maxsize=64)
def _wavenumbers(L: float, n_side: int) -> Tuple[np.ndarray, np.ndarray]:
    k = np.fft.fftfreq(n_side, d=1.0 / n_side) / L
    n1, n2 = np.meshgrid(k, k, indexing="ij")
    n1.setflags(write=False)
    n2.setflags(write=False)
    return n1, n2


@lru_cache(maxsize=64)
def _mode_norm2(L: float, n_side: int) -> np.ndarray:
    n1, n2 = _wavenumbers(L, n_side)
    out = n1 * n1 + n2 * n2
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a field (or a batch of fields) on a grid.

    Leading axes of ``coeffs`` are batch axes (ensemble members, time samples);
    the last two axes are the dual lattice in FFT order. The array is copied on
    construction and frozen.
    """

    grid: GridSpec
    coeffs: np.ndarray
    is_real: bool = True

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.ndim < 2 or coeffs.shape[-2:] != self.grid.shape:
            raise ShapeError(
                f"coefficient shape {coeffs.shape} does not end in {self.grid.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape[:-2]

    def with_coeffs(self, coeffs: np.ndarray, is_real: Optional[bool] = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.is_real if is_real is None else is_real)

    def member(self, index) -> "SpectralField":
        """Select batch entries, e.g. ``field.member(3)`` or ``field.member(slice(0, 10))``."""
        return self.with_coeffs(self.coeffs[index])

    def to_physical(self, oversample: int = 1) -> np.ndarray:
        return inverse_transform(self, oversample=oversample)

    def conjugate(self) -> "SpectralField":
        """Coefficients of the pointwise complex conjugate."""
        return self.with_coeffs(np.conj(reflect_modes(self.coeffs)))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self.grid.require_same(other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs, self.is_real and other.is_real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self.grid.require_same(other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs, self.is_real and other.is_real)

    def scaled(self, factor: float) -> "SpectralField":
        return self.with_coeffs(factor * self.coeffs)

    @classmethod
    def zeros(cls, grid: GridSpec, batch_shape: Tuple[int, ...] = (), is_real: bool = True) -> "SpectralField":
        return cls(grid, np.zeros(batch_shape + grid.shape, dtype=np.complex128), is_real)


def forward_transform(
    values: np.ndarray, grid: GridSpec, is_real: Optional[bool] = None
) -> SpectralField:
    """Transform physical samples into FT1 coefficients.

    Args:
        values: Array whose last two axes are the physical grid.
        grid: The grid the samples live on.
        is_real: Hermitian flag; inferred from the dtype when omitted.

    Returns:
        SpectralField with f̂(n) = (1/2π)·Σ_x f(x)e^{-in·x}·dx².

    Raises:
        ShapeError: If the trailing dimensions do not match the grid.
    """
    values = np.asarray(values)
    if values.ndim < 2 or values.shape[-2:] != grid.shape:
        raise ShapeError(f"values of shape {values.shape} do not match grid {grid.shape}")
    if is_real is None:
        is_real = not np.iscomplexobj(values)
    scale = 2.0 * math.pi * grid.L**2 / grid.n_side**2
    coeffs = scale * np.fft.fft2(values, axes=(-2, -1))
    if is_real:
        coeffs = hermitian_part(coeffs)
    return SpectralField(grid, coeffs, is_real)


def inverse_transform(field: SpectralField, oversample: int = 1) -> np.ndarray:
    """Evaluate a field on its grid, or on an ``oversample``-times finer grid."""
    grid = field.grid
    coeffs = field.coeffs
    if oversample != 1:
        grid = grid.refined(oversample)
        coeffs = pad_modes(coeffs, grid.n_side)
    values = grid.n_side**2 / (2.0 * math.pi * grid.L**2) * np.fft.ifft2(coeffs, axes=(-2, -1))
    return values.real if field.is_real else values


def reflect_modes(coeffs: np.ndarray) -> np.ndarray:
    """Array whose entry at n is the input's entry at -n."""
    flipped = np.flip(coeffs, axis=(-2, -1))
    return np.roll(flipped, shift=1, axis=(-2, -1))


def hermitian_part(coeffs: np.ndarray) -> np.ndarray:
    """Symmetrise so that c(-n) = conj(c(n)) holds exactly (bitwise)."""
    return 0.5 * (coeffs + np.conj(reflect_modes(coeffs)))


def hermitian_defect(field: SpectralField) -> float:
    """Largest violation of c(-n) = conj(c(n)), relative to the largest coefficient."""
    scale = float(np.max(np.abs(field.coeffs), initial=0.0))
    if scale == 0.0:
        return 0.0
    gap = np.abs(field.coeffs - np.conj(reflect_modes(field.coeffs)))
    return float(np.max(gap)) / scale


def _pad_last_axis(coeffs: np.ndarray, m: int) -> np.ndarray:
    n = coeffs.shape[-1]
    h = n // 2
    out = np.zeros(coeffs.shape[:-1] + (m,), dtype=np.complex128)
    out[..., :h] = coeffs[..., :h]
    out[..., m - h + 1 :] = coeffs[..., h + 1 :]
    # the ±h pair shares the single Nyquist coefficient
    out[..., h] = 0.5 * coeffs[..., h]
    out[..., m - h] = 0.5 * coeffs[..., h]
    return out


def _truncate_last_axis(coeffs: np.ndarray, n: int) -> np.ndarray:
    m = coeffs.shape[-1]
    h = n // 2
    out = np.empty(coeffs.shape[:-1] + (n,), dtype=np.complex128)
    out[..., :h] = coeffs[..., :h]
    out[..., h + 1 :] = coeffs[..., m - h + 1 :]
    out[..., h] = coeffs[..., h] + coeffs[..., m - h]
    return out


def pad_modes(coeffs: np.ndarray, m: int) -> np.ndarray:
    """Embed an n×n coefficient array into an m×m one (m >= n)."""
    n = coeffs.shape[-1]
    if m == n:
        return np.array(coeffs, dtype=np.complex128)
    if m < n:
        raise ShapeError(f"cannot pad {n} modes down to {m}")
    out = _pad_last_axis(coeffs, m)
    out = np.swapaxes(_pad_last_axis(np.swapaxes(out, -1, -2), m), -1, -2)
    return out


def truncate_modes(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Restrict an m×m coefficient array to the n×n lattice; inverse of pad_modes."""
    m = coeffs.shape[-1]
    if m == n:
        return np.array(coeffs, dtype=np.complex128)
    if m < n:
        raise ShapeError(f"cannot truncate {m} modes up to {n}")
    out = _truncate_last_axis(coeffs, n)
    out = np.swapaxes(_truncate_last_axis(np.swapaxes(out, -1, -2), n), -1, -2)
    return out


def resample(field: SpectralField, grid: GridSpec) -> SpectralField:
    """Move a field to another grid of the same torus by padding or truncation."""
    if grid.L != field.grid.L:
        raise GridMismatchError(f"cannot resample from L={field.grid.L} to L={grid.L}")
    if grid.n_side >= field.grid.n_side:
        coeffs = pad_modes(field.coeffs, grid.n_side)
    else:
        coeffs = truncate_modes(field.coeffs, grid.n_side)
    return SpectralField(grid, coeffs, field.is_real)


def l2_norm_squared(field: SpectralField) -> np.ndarray:
    """∫|f|² dx from the coefficients: Σ_n |f̂(n)|² / L²."""
    return np.sum(np.abs(field.coeffs) ** 2, axis=(-2, -1)) / field.grid.L**2


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C^∞ step rising from 0 at x <= 0 to 1 at x >= 1, built from e^{-1/x}."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 1.0, 0.0)
    mid = (x > 0.0) & (x < 1.0)
    xm = x[mid]
    with np.errstate(over="ignore"):
        out[mid] = 1.0 / (1.0 + np.exp(1.0 / xm - 1.0 / (1.0 - xm)))
    return out


def eta(r: np.ndarray) -> np.ndarray:
    """Littlewood-Paley bump: 1 on [0, 5/4], 0 from 8/5 on."""
    r = np.abs(np.asarray(r, dtype=float))
    return 1.0 - smooth_step((r - ETA_INNER) / (ETA_OUTER - ETA_INNER))


def chi_profile(z: np.ndarray, profile: str = "smooth") -> np.ndarray:
    """Radial cutoff profile χ(|z|).

    ``smooth`` is 1 on |z| <= 1/2 and 0 on |z| >= 2; ``sharp`` is the indicator
    of the closed unit disk; ``physical_bump`` is the transform of a compactly
    supported radial bump (not pinned at 1, for sensitivity runs only).
    """
    z = np.abs(np.asarray(z, dtype=float))
    if profile == "smooth":
        return 1.0 - smooth_step((z - CHI_INNER) / (CHI_OUTER - CHI_INNER))
    if profile == "sharp":
        return np.where(z <= 1.0, 1.0, 0.0)
    if profile == "physical_bump":
        return _physical_bump(z)
    raise ParameterError(f"unknown chi profile {profile!r}; expected one of {CHI_PROFILES}")


def _physical_bump(z: np.ndarray) -> np.ndarray:
    r = np.linspace(0.0, 1.0, 2001)
    bump = 1.0 - smooth_step((r - 0.5) / 0.5)
    z_max = float(np.max(z, initial=0.0))
    table_z = np.linspace(0.0, max(z_max, 1.0), 4097)
    integrand = bump[None, :] * special.j0(table_z[:, None] * r[None, :]) * r[None, :]
    table = integrate.trapezoid(integrand, r, axis=1)
    return np.interp(z, table_z, table)


class MultiplierKind(str, Enum):
    SMOOTH_CUTOFF = "smooth_cutoff"
    SHARP_CUTOFF = "sharp_cutoff"
    BRACKET_POWER = "bracket_power"
    HEAT_SEMIGROUP = "heat_semigroup"
    WAVE_D = "wave_D"
    WAVE_DDOT = "wave_Ddot"
    LP_BLOCK = "lp_block"


@dataclass(frozen=True)
class MultiplierSpec:
    """Radial Fourier multiplier m(n) evaluated on the dual lattice.

    Use the classmethod constructors rather than filling fields by hand, e.g.
    ``MultiplierSpec.smooth_cutoff(16)`` for Π_16 or
    ``MultiplierSpec.bracket_power(-2)`` for (1-Δ)^{-1}.
    """

    kind: MultiplierKind
    N: float = 1.0
    profile: str = "smooth"
    s: float = 0.0
    t: float = 0.0
    k: int = 0

    def __post_init__(self):
        if not self.N >= 1.0:
            raise ParameterError(f"cutoff N must be >= 1, got {self.N}")
        if not math.isfinite(self.s):
            raise ParameterError(f"exponent s must be finite, got {self.s}")
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise ParameterError(f"time t must be >= 0, got {self.t}")
        if self.k < 0:
            raise ParameterError(f"block index k must be >= 0, got {self.k}")
        if self.profile not in CHI_PROFILES:
            raise ParameterError(f"unknown chi profile {self.profile!r}")

    @classmethod
    def smooth_cutoff(cls, N: float, profile: str = "smooth") -> "MultiplierSpec":
        return cls(MultiplierKind.SMOOTH_CUTOFF, N=N, profile=profile)

    @classmethod
    def sharp_cutoff(cls, N: float) -> "MultiplierSpec":
        return cls(MultiplierKind.SHARP_CUTOFF, N=N, profile="sharp")

    @classmethod
    def bracket_power(cls, s: float) -> "MultiplierSpec":
        return cls(MultiplierKind.BRACKET_POWER, s=s)

    @classmethod
    def heat_semigroup(cls, t: float) -> "MultiplierSpec":
        return cls(MultiplierKind.HEAT_SEMIGROUP, t=t)

    @classmethod
    def wave_D(cls, t: float) -> "MultiplierSpec":
        return cls(MultiplierKind.WAVE_D, t=t)

    @classmethod
    def wave_Ddot(cls, t: float) -> "MultiplierSpec":
        return cls(MultiplierKind.WAVE_DDOT, t=t)

    @classmethod
    def lp_block(cls, k: int) -> "MultiplierSpec":
        return cls(MultiplierKind.LP_BLOCK, k=k)

    def symbol(self, grid: GridSpec) -> np.ndarray:
        norm2 = grid.mode_norm2()
        kind = self.kind
        if kind is MultiplierKind.SMOOTH_CUTOFF:
            return chi_profile(np.sqrt(norm2) / self.N, self.profile)
        if kind is MultiplierKind.SHARP_CUTOFF:
            return chi_profile(np.sqrt(norm2) / self.N, "sharp")
        if kind is MultiplierKind.BRACKET_POWER:
            return (1.0 + norm2) ** (0.5 * self.s)
        if kind is MultiplierKind.HEAT_SEMIGROUP:
            return np.exp(-self.t * (1.0 + norm2))
        if kind in (MultiplierKind.WAVE_D, MultiplierKind.WAVE_DDOT):
            w = np.sqrt(0.75 + norm2)
            damping = math.exp(-0.5 * self.t)
            if kind is MultiplierKind.WAVE_D:
                return damping * np.sin(self.t * w) / w
            return damping * (np.cos(self.t * w) - np.sin(self.t * w) / (2.0 * w))
        return lp_symbol(grid, self.k)


ChiProfile = Union[str, Callable[[np.ndarray], np.ndarray]]


def cutoff_symbol(grid: GridSpec, N: float, profile: ChiProfile = "smooth") -> np.ndarray:
    """χ_N(n) = χ(|n|/N) on the lattice; ``profile`` may be a profile id or a callable χ."""
    if callable(profile):
        if not N >= 1.0:
            raise ParameterError(f"cutoff N must be >= 1, got {N}")
        return np.asarray(profile(np.sqrt(grid.mode_norm2()) / N), dtype=float)
    return MultiplierSpec.smooth_cutoff(N, profile).symbol(grid)


def apply_multiplier(field: SpectralField, m: MultiplierSpec) -> SpectralField:
    """Multiply every coefficient by the symbol; realness is preserved (radial symbols)."""
    return field.with_coeffs(field.coeffs * m.symbol(field.grid))


def lp_symbol(grid: GridSpec, k: int) -> np.ndarray:
    """Symbol of the k-th Littlewood-Paley block."""
    r = np.sqrt(grid.mode_norm2())
    if k == 0:
        return eta(r)
    return eta(r / 2.0**k) - eta(r / 2.0 ** (k - 1))


def max_mode_magnitude(grid: GridSpec) -> float:
    """|n| of the corner mode, the largest represented."""
    return math.sqrt(2.0) * grid.nyquist


def lp_kmax(grid: GridSpec) -> int:
    """Smallest K for which blocks 0..K sum to one on every represented mode."""
    ratio = max_mode_magnitude(grid) / ETA_INNER
    return max(0, math.ceil(math.log2(ratio))) if ratio > 1.0 else 0


def lp_block_is_empty(grid: GridSpec, k: int) -> bool:
    return k >= 1 and max_mode_magnitude(grid) <= ETA_INNER * 2.0 ** (k - 1)


def lp_project(field: SpectralField, k: int) -> SpectralField:
    """Littlewood-Paley projection P_k.

    A block lying entirely above the represented modes yields the zero field
    and a logged warning.
    """
    if k < 0:
        raise ParameterError(f"block index must be >= 0, got {k}")
    if lp_block_is_empty(field.grid, k):
        logger.warning(f"LP block {k} lies above every represented mode of {field.grid}")
        return field.with_coeffs(np.zeros_like(field.coeffs))
    return field.with_coeffs(field.coeffs * lp_symbol(field.grid, k))


def _window_transform(
    F: Callable[[np.ndarray, np.ndarray], np.ndarray], grid: GridSpec, window: int, refine: int
) -> np.ndarray:
    """(1/2π)∫F(x)e^{-in·x}dx over the window box, on the represented modes of ``grid``."""
    if refine < 1:
        raise ParameterError(f"refine must be >= 1, got {refine}")
    copies = 2 * window + 1
    size = copies * grid.n_side * refine
    side = copies * 2.0 * math.pi * grid.L
    h = side / size
    x = -0.5 * side + h * np.arange(size)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    spectrum = np.fft.fft2(np.asarray(F(x1, x2), dtype=np.complex128))
    # lattice mode k/L sits at box frequency k·copies
    k = np.rint(np.fft.fftfreq(grid.n_side) * grid.n_side).astype(int)
    index = (k * copies) % size
    n1, n2 = grid.wavenumbers()
    phase = np.exp(0.5j * side * (n1 + n2))
    return h * h / (2.0 * math.pi) * phase * spectrum[np.ix_(index, index)]


def poisson_check(
    F: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grid: GridSpec,
    F_hat: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    window: int = 3,
    tol: float = 1e-12,
    refine: int = 2,
) -> float:
    """Compare both sides of the Poisson summation formula on the grid.

    The physical side periodises ``F`` over ``(2·window+1)²`` copies of the
    fundamental domain; the spectral side is (1/2πL²)Σ F̂(n)e^{in·x} over the
    represented modes. Without ``F_hat`` the transform is computed by the
    rectangle rule over the window on a grid ``refine`` times finer than
    ``grid``.

    Args:
        F: Function on R², vectorised over coordinate arrays.
        grid: Evaluation grid.
        F_hat: Optional closed-form transform with the 1/2π convention.
        window: Number of fundamental domains on each side of the central one.
        tol: Decay level required at the window edge and at the spectral edge.
        refine: Quadrature refinement used when ``F_hat`` is omitted.

    Returns:
        Maximum absolute residual over the grid points.

    Raises:
        PreconditionError: If F or F̂ is not below ``tol`` at the edges.
    """
    if window < 3:
        raise PreconditionError(f"window must cover at least 3 fundamental domains, got {window}")
    x1, x2 = grid.points(centered=True)
    period = 2.0 * math.pi * grid.L
    periodized = np.zeros(grid.shape, dtype=np.complex128)
    edge = 0.0
    for m1 in range(-window, window + 1):
        for m2 in range(-window, window + 1):
            sample = np.asarray(F(x1 + m1 * period, x2 + m2 * period), dtype=np.complex128)
            periodized += sample
            if max(abs(m1), abs(m2)) == window:
                edge = max(edge, float(np.max(np.abs(sample))))
    if edge > tol:
        raise PreconditionError(f"F is {edge:.3e} at the window edge, above tolerance {tol:g}")

    n1, n2 = grid.wavenumbers()
    if F_hat is None:
        coeffs = _window_transform(F, grid, window, refine)
    else:
        coeffs = np.asarray(F_hat(n1, n2), dtype=np.complex128)
    rim = np.isclose(np.maximum(np.abs(n1), np.abs(n2)), grid.nyquist)
    spectral_edge = float(np.max(np.abs(coeffs[rim])))
    if spectral_edge > tol:
        raise PreconditionError(f"F_hat is {spectral_edge:.3e} at the Nyquist rim, above tolerance {tol:g}")
    spectral = inverse_transform(SpectralField(grid, coeffs, is_real=False))
    return float(np.max(np.abs(spectral - periodized)))


"""Monte Carlo summaries, scan fits and Markov chain diagnostics."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats as sps

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    slope_se: float
    intercept: float

    def interval(self, confidence: float = 0.95) -> Tuple[float, float]:
        z = sps.norm.ppf(0.5 + 0.5 * confidence)
        return self.slope - z * self.slope_se, self.slope + z * self.slope_se


def linear_fit(x: Sequence[float], y: Sequence[float], y_se: Optional[Sequence[float]] = None) -> LinearFit:
    """Least-squares line through (x, y).

    Without ``y_se`` the slope error comes from the residual scatter
    (``scipy.stats.linregress``) and is NaN for two points, which leave no
    scatter to estimate it from; with ``y_se``, from the weighted normal equations.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("a line fit needs at least two points")
    if y_se is None:
        if x.size == 2:
            slope = (y[1] - y[0]) / (x[1] - x[0])
            return LinearFit(float(slope), math.nan, float(y[0] - slope * x[0]))
        result = sps.linregress(x, y)
        return LinearFit(float(result.slope), float(result.stderr), float(result.intercept))
    weights = 1.0 / np.asarray(y_se, dtype=float)
    coeffs, cov = np.polyfit(x, y, 1, w=weights, cov="unscaled")
    return LinearFit(float(coeffs[0]), float(math.sqrt(cov[0, 0])), float(coeffs[1]))


def fit_log_slope(
    x: Sequence[float], y: Sequence[float], y_se: Optional[Sequence[float]] = None
) -> LinearFit:
    """Slope of log y against log x; ``y_se`` is propagated as y_se/y."""
    y = np.asarray(y, dtype=float)
    log_se = None if y_se is None else np.asarray(y_se, dtype=float) / y
    return linear_fit(np.log(np.asarray(x, dtype=float)), np.log(y), log_se)


@dataclass(frozen=True)
class ScanPoint:
    """Ensemble summary at one value of the scanned parameter."""

    parameter: float
    count: int
    mean: float
    median: float
    variance: float
    half_width: float

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else float("nan")


def _half_width(variance: float, count: int, confidence: float) -> float:
    if count < 2:
        return float("nan")
    return float(sps.norm.ppf(0.5 + 0.5 * confidence) * math.sqrt(variance / count))


def scan_point(parameter: float, samples: np.ndarray, confidence: float = 0.95) -> ScanPoint:
    samples = np.asarray(samples, dtype=float).ravel()
    variance = float(np.var(samples, ddof=1)) if samples.size > 1 else 0.0
    return ScanPoint(
        parameter=float(parameter),
        count=int(samples.size),
        mean=float(np.mean(samples)),
        median=float(np.median(samples)),
        variance=variance,
        half_width=_half_width(variance, samples.size, confidence),
    )


@dataclass(frozen=True)
class EnsembleStats:
    """Monte Carlo estimate, optionally the result of a parameter scan.

    For a scan, ``points`` holds one summary per parameter value, ``slope`` is
    the fitted log-log slope and the scalar fields summarise the last point.
    """

    count: int
    mean: float
    variance: float
    half_width: float
    confidence: float = 0.95
    slope: Optional[float] = None
    slope_se: Optional[float] = None
    intercept: Optional[float] = None
    parameter: Optional[str] = None
    points: Tuple[ScanPoint, ...] = ()
    warnings: Tuple[str, ...] = field(default=())

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else float("nan")

    @classmethod
    def from_samples(cls, samples: Sequence[float], confidence: float = 0.95) -> "EnsembleStats":
        point = scan_point(0.0, np.asarray(samples), confidence)
        return cls(point.count, point.mean, point.variance, point.half_width, confidence)

    @classmethod
    def from_scan(
        cls,
        parameter: str,
        points: Sequence[ScanPoint],
        fit: Optional[LinearFit] = None,
        confidence: float = 0.95,
        warnings: Sequence[str] = (),
    ) -> "EnsembleStats":
        last = points[-1]
        return cls(
            count=last.count,
            mean=last.mean,
            variance=last.variance,
            half_width=last.half_width,
            confidence=confidence,
            slope=None if fit is None else fit.slope,
            slope_se=None if fit is None else fit.slope_se,
            intercept=None if fit is None else fit.intercept,
            parameter=parameter,
            points=tuple(points),
            warnings=tuple(warnings),
        )

    def values(self, statistic: str = "median") -> np.ndarray:
        return np.array([getattr(p, statistic) for p in self.points])

    def octave_ratios(self, statistic: str = "median") -> np.ndarray:
        """Ratios of successive scan values (one per doubling of the parameter)."""
        values = self.values(statistic)
        return values[1:] / values[:-1]

    def top_octave_variation(self, statistic: str = "mean") -> float:
        values = self.values(statistic)
        return float(abs(values[-1] - values[-2]) / abs(values[-2]))

    def slope_interval(self) -> Tuple[float, float]:
        if self.slope is None or self.slope_se is None:
            raise ValueError("no slope was fitted")
        return LinearFit(self.slope, self.slope_se, self.intercept or 0.0).interval(self.confidence)

    def to_frame(self) -> pd.DataFrame:
        if not self.points:
            return pd.DataFrame(
                [{"count": self.count, "mean": self.mean, "variance": self.variance, "half_width": self.half_width}]
            )
        frame = pd.DataFrame([p.__dict__ for p in self.points])
        frame = frame.rename(columns={"parameter": self.parameter or "parameter"})
        frame["slope"] = self.slope
        frame["slope_se"] = self.slope_se
        return frame

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "half_width": self.half_width,
            "confidence": self.confidence,
            "slope": self.slope,
            "slope_se": self.slope_se,
            "intercept": self.intercept,
            "parameter": self.parameter,
            "points": [p.__dict__ for p in self.points],
            "warnings": list(self.warnings),
        }


def mean_shift(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """Difference of means and its combined standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    se = math.sqrt(np.var(a, ddof=1) / a.size + np.var(b, ddof=1) / b.size)
    return float(np.mean(b) - np.mean(a)), se


def ks_pvalue(a: Sequence[float], b: Sequence[float]) -> float:
    return float(sps.ks_2samp(np.asarray(a), np.asarray(b)).pvalue)


def autocorrelation(series: np.ndarray) -> np.ndarray:
    """Normalised autocorrelation along the last axis, averaged over leading axes."""
    x = np.asarray(series, dtype=float)
    x = x.reshape(-1, x.shape[-1])
    n = x.shape[-1]
    centred = x - x.mean(axis=-1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centred, n=size, axis=-1)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), n=size, axis=-1)[:, :n].mean(axis=0)
    if acov[0] <= 0.0:
        return np.concatenate([[1.0], np.zeros(n - 1)])
    return acov / acov[0]


def integrated_autocorrelation_time(series: np.ndarray, window_factor: float = 5.0) -> float:
    """τ = 1 + 2Σρ(t) with the self-consistent window M >= window_factor·τ(M)."""
    rho = autocorrelation(series)
    taus = 2.0 * np.cumsum(rho) - 1.0
    lags = np.arange(taus.size)
    inside = lags < window_factor * taus
    window = int(np.argmin(inside)) if not np.all(inside) else taus.size - 1
    return float(max(taus[window], 1.0))


def split_rhat(chains: np.ndarray) -> float:
    """Split-chain potential scale reduction factor for an (m, n) array of traces."""
    chains = np.asarray(chains, dtype=float)
    half = chains.shape[-1] // 2
    if half < 2:
        return float("nan")
    halves = np.concatenate([chains[:, :half], chains[:, half : 2 * half]], axis=0)
    n = halves.shape[-1]
    within = float(np.mean(np.var(halves, axis=1, ddof=1)))
    between = n * float(np.var(np.mean(halves, axis=1), ddof=1))
    if within == 0.0:
        return 1.0
    pooled = (n - 1) / n * within + between / n
    return math.sqrt(pooled / within)


def effective_sample_size(chains: np.ndarray) -> float:
    chains = np.asarray(chains, dtype=float)
    return float(chains.size / integrated_autocorrelation_time(chains))

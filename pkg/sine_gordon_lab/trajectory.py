"""Time-indexed simulation records and the time grids norms are sampled on."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from sine_gordon_lab.errors import ParameterError, ShapeError
from sine_gordon_lab.fourier import SpectralField
from sine_gordon_lab.noise import SeededStream

logger = logging.getLogger(__name__)


def norm_time_grid(
    T: float, t_min: float = 1e-3, ratio: float = 1.2, step: float = 0.05
) -> np.ndarray:
    """Sampling times in (0, T]: geometric from ``t_min`` joined with a uniform grid.

    The geometric part refines towards t = 0 where the X-norm weight
    min(1, t)^{(s+s0)/2} varies fastest. T itself is always included.
    """
    if not T > 0.0:
        raise ParameterError(f"T must be positive, got {T}")
    geometric = []
    t = t_min
    while t < T:
        geometric.append(t)
        t *= ratio
    count = int(np.floor(T / step + 1e-9))
    uniform = step * np.arange(1, count + 1)
    times = np.union1d(np.asarray(geometric), uniform)
    times = np.union1d(times[times <= T], [T])
    return times


@dataclass(frozen=True)
class TrajectoryRecord:
    """Fields of one run sampled at increasing times.

    Attributes:
        times: Sample times, shape (n_times,).
        fields: SpectralField whose leading axis is time (may be None when only
            norm values were kept).
        velocities: Time derivative for second-order-in-time runs.
        values: Optional per-time scalar diagnostics.
        integrator: Free-form integrator metadata (dt, placement, ...).
        stream: Random stream the run consumed, if any.
    """

    times: np.ndarray
    fields: Optional[SpectralField] = None
    velocities: Optional[SpectralField] = None
    values: Optional[np.ndarray] = None
    integrator: Dict[str, Any] = field(default_factory=dict)
    stream: Optional[SeededStream] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        if times.ndim != 1:
            raise ShapeError(f"times must be one-dimensional, got shape {times.shape}")
        if np.any(np.diff(times) < 0.0):
            raise ParameterError("trajectory times must be nondecreasing")
        for name in ("fields", "velocities"):
            data = getattr(self, name)
            if data is not None and data.batch_shape[:1] != times.shape:
                raise ShapeError(f"{name} has {data.batch_shape[:1]} time samples, expected {times.shape}")

    def __len__(self) -> int:
        return int(self.times.size)

    def at(self, index: int) -> SpectralField:
        if self.fields is None:
            raise ValueError("trajectory does not store fields")
        return self.fields.member(index)

    def scaled(self, factor: float) -> "TrajectoryRecord":
        scaled_fields = None if self.fields is None else self.fields.scaled(factor)
        scaled_velocities = None if self.velocities is None else self.velocities.scaled(factor)
        return TrajectoryRecord(
            self.times, scaled_fields, scaled_velocities, self.values, dict(self.integrator), self.stream
        )

    def metadata(self) -> Dict[str, Any]:
        meta: Dict[str, Any] = {"times": self.times.tolist(), "integrator": dict(self.integrator)}
        if self.stream is not None:
            meta["stream"] = self.stream.as_dict()
        if self.fields is not None:
            meta["L"] = self.fields.grid.L
            meta["n_side"] = self.fields.grid.n_side
        return meta

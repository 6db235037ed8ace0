"""Time-stamped frequency paths shared by the stochastic and deterministic engines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass
class Trajectory:
    """Uniformly spaced sequence of simplex points starting at t0.

    kind is "stochastic" (points on the 1/N grid, meta carries N) or
    "deterministic".  absorbed_at is the process time at which a stochastic
    run first hit a simplex vertex, if it did.
    """

    t0: float
    dt: float
    points: np.ndarray
    kind: str = "deterministic"
    absorbed_at: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ConfigurationError("trajectory needs a (steps, d) array of points")
        if self.dt <= 0:
            raise ConfigurationError("trajectory grid step must be positive")

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def end(self) -> float:
        return self.t0 + (len(self.points) - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.points))

    def index_of(self, t: float) -> int:
        """Exact grid index of time t; rejects off-grid times."""
        pos = (t - self.t0) / self.dt
        idx = round(pos)
        if abs(pos - idx) > 1e-9 * max(1.0, abs(pos)) or not 0 <= idx < len(self.points):
            raise ValueError(f"time {t} is not on the trajectory grid")
        return int(idx)

    def value_at(self, t: float) -> np.ndarray:
        """Linear interpolation between consecutive grid points."""
        pos = (t - self.t0) / self.dt
        tol = 1e-9 * max(1.0, abs(pos))
        if pos < -tol or pos > len(self.points) - 1 + tol:
            raise ValueError(
                f"time {t} outside trajectory range [{self.t0}, {self.end}]")
        lo = min(int(np.floor(max(pos, 0.0))), len(self.points) - 1)
        frac = pos - lo
        if frac <= 0 or lo == len(self.points) - 1:
            return self.points[lo].copy()
        return self.points[lo] + frac * (self.points[lo + 1] - self.points[lo])

    def window(self, t_start: float, t_end: float) -> np.ndarray:
        """Grid points with t_start <= t <= t_end (grid-scale tolerance at ends)."""
        times = self.times()
        tol = 1e-9 * np.maximum(1.0, np.abs(times))
        mask = (times >= t_start - tol) & (times <= t_end + tol)
        return self.points[mask]

    def write_csv(self, path) -> None:
        """CSV with header t,x_1,...,x_d; 12 significant digits."""
        header = "t," + ",".join(f"x_{i + 1}" for i in range(self.d))
        data = np.column_stack([self.times(), self.points])
        np.savetxt(path, data, fmt="%.12g", delimiter=",", header=header, comments="")


def interpolate(trajectory: Trajectory, t: float) -> np.ndarray:
    """Continuous-time view of a grid path (linear between grid states)."""
    return trajectory.value_at(t)

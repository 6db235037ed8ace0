"""Payoff matrices, delay kernels and history-dependent fitness.

A delay kernel is a discrete probability distribution over nonnegative lags
(in time units).  All kernel variants -- a point mass at a single lag, an
explicit weight vector on an equally spaced lag grid, or a sampled continuous
density -- share one representation: ascending ``lags`` with matching
``weights`` summing to one.  Lags must land exactly on whatever evaluation
grid they are used with; we reject misaligned lags instead of interpolating
so that the stochastic and deterministic engines see identical kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DegenerateGameError, RegimeError

_WEIGHT_SUM_TOL = 1e-12
_GRID_ALIGN_TOL = 1e-9


def _as_simplex(x, *, tol: float = 1e-9) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ConfigurationError(f"expected a frequency vector of dimension >= 2, got shape {x.shape}")
    if np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        raise ConfigurationError(f"vector {x} is not in the unit simplex (tol {tol})")
    return x


@dataclass(frozen=True)
class PayoffMatrix:
    """Square payoff matrix; entry [i, j] pays strategy i against strategy j."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ConfigurationError(f"payoff matrix must be square, got shape {entries.shape}")
        if entries.shape[0] < 2:
            raise ConfigurationError("payoff matrix needs at least 2 strategies")
        if not np.all(np.isfinite(entries)):
            raise ConfigurationError("payoff entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_2x2(cls, a: float, b: float, c: float, d: float) -> "PayoffMatrix":
        return cls(np.array([[a, b], [c, d]], dtype=float))

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def max_pairwise_gain(self) -> float:
        """Largest possible fitness advantage of one strategy over another.

        max over ordered pairs (i, j) of max_k (A[i,k] - A[j,k]); this bounds
        [f_i - f_j]_+ over the simplex.
        """
        a = self.entries
        best = 0.0
        for i in range(self.d):
            for j in range(self.d):
                if i != j:
                    best = max(best, float(np.max(a[i] - a[j])))
        return best

    def is_snowdrift(self) -> bool:
        """b > d and c > a: unique stable mixed equilibrium of the memoryless dynamics."""
        if self.d != 2:
            return False
        a = self.entries
        return a[0, 1] > a[1, 1] and a[1, 0] > a[0, 0]


@dataclass(frozen=True)
class DelayKernel:
    """Probability distribution over lags, ascending, in time units."""

    lags: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if lags.shape != weights.shape or lags.ndim != 1 or lags.size == 0:
            raise ConfigurationError("kernel lags and weights must be matching 1-d arrays")
        if np.any(lags < 0) or np.any(np.diff(lags) <= 0):
            raise ConfigurationError("kernel lags must be nonnegative and strictly increasing")
        if np.any(weights < 0):
            raise ConfigurationError("kernel weights must be nonnegative")
        if abs(weights.sum() - 1.0) > _WEIGHT_SUM_TOL:
            raise ConfigurationError(
                f"kernel weights sum to {weights.sum()!r}, expected 1 within {_WEIGHT_SUM_TOL}")
        lags.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def dirac(cls, r: float) -> "DelayKernel":
        """Point mass at lag r (r = 0 gives the memoryless kernel)."""
        if r < 0:
            raise ConfigurationError("delay must be nonnegative")
        return cls(np.array([float(r)]), np.array([1.0]))

    @classmethod
    def discrete(cls, weights, spacing: float) -> "DelayKernel":
        """Weights k_0..k_m attached to lags 0, spacing, ..., m*spacing."""
        weights = np.asarray(weights, dtype=float)
        if spacing <= 0:
            raise ConfigurationError("lag spacing must be positive")
        lags = spacing * np.arange(weights.size, dtype=float)
        return cls(lags, weights)

    @classmethod
    def sampled(cls, density: Callable[[float], float], r: float, intervals: int) -> "DelayKernel":
        """Sample a density on [-r, 0] at intervals+1 uniform points.

        Trapezoid quadrature weights, renormalized to total mass exactly 1.
        """
        if r <= 0 or intervals < 1:
            raise ConfigurationError("sampled kernel needs r > 0 and at least one interval")
        h = r / intervals
        lags = h * np.arange(intervals + 1, dtype=float)
        values = np.array([float(density(-lag)) for lag in lags])
        if np.any(values < 0):
            raise ConfigurationError("kernel density must be nonnegative")
        coeff = np.full(intervals + 1, h)
        coeff[0] = coeff[-1] = h / 2.0
        weights = coeff * values
        mass = weights.sum()
        if mass <= 0:
            raise ConfigurationError("kernel density integrates to zero")
        return cls(lags, weights / mass)

    @classmethod
    def uniform(cls, r: float, intervals: int = 100) -> "DelayKernel":
        return cls.sampled(lambda _s: 1.0 / r, r, intervals)

    @property
    def r(self) -> float:
        """Maximal lag."""
        return float(self.lags[-1])

    def step_offsets(self, grid_step: float) -> np.ndarray:
        """Lags as integer multiples of grid_step; reject misaligned lags."""
        if grid_step <= 0:
            raise ConfigurationError("grid step must be positive")
        ratio = self.lags / grid_step
        offsets = np.rint(ratio)
        if np.any(np.abs(ratio - offsets) > _GRID_ALIGN_TOL * np.maximum(1.0, np.abs(ratio))):
            raise ConfigurationError(
                f"kernel lags {self.lags} are not integer multiples of grid step {grid_step}")
        return offsets.astype(np.int64)


@dataclass(frozen=True)
class GameSpec:
    """Payoffs plus the delay structure used to average past population states.

    rate_scale multiplies every imitation probability; it is a pure time
    rescaling of the stochastic process (default 1).
    """

    payoffs: PayoffMatrix
    kernel: DelayKernel
    rate_scale: float = 1.0

    def __post_init__(self):
        if not (self.rate_scale > 0 and np.isfinite(self.rate_scale)):
            raise ConfigurationError("rate_scale must be positive and finite")

    @property
    def d(self) -> int:
        return self.payoffs.d


def delayed_average(history: np.ndarray, grid_step: float, kernel: DelayKernel) -> np.ndarray:
    """Kernel-weighted average of past states.

    history holds one frequency vector per row, uniformly spaced by grid_step,
    most recent last.  Row -1-k corresponds to lag k*grid_step.
    """
    history = np.asarray(history, dtype=float)
    if history.ndim != 2:
        raise ConfigurationError("history must be a 2-d array of frequency rows")
    offsets = kernel.step_offsets(grid_step)
    if offsets[-1] >= history.shape[0]:
        raise ConfigurationError(
            f"history of {history.shape[0]} rows does not cover maximal lag "
            f"{kernel.r} at step {grid_step}")
    rows = history[-1 - offsets]
    return kernel.weights @ rows


def fitness(xbar: np.ndarray, payoffs: PayoffMatrix) -> np.ndarray:
    """Per-strategy payoff against the (delay-averaged) population state."""
    xbar = np.asarray(xbar, dtype=float)
    if xbar.shape != (payoffs.d,):
        raise ConfigurationError(
            f"state of dimension {xbar.shape} does not match {payoffs.d} strategies")
    return payoffs.entries @ xbar


def interior_equilibrium_2x2(payoffs: PayoffMatrix) -> float | None:
    """Frequency e of strategy 1 equalizing the two payoffs, if it is interior.

    Root of (a - b - c + d) e + b - d = 0; None unless strictly in (0, 1).
    """
    if payoffs.d != 2:
        raise ConfigurationError("interior_equilibrium_2x2 needs a 2x2 game")
    (a, b), (c, d) = payoffs.entries
    denom = a - b - c + d
    if denom == 0.0:
        raise DegenerateGameError("a - b - c + d = 0: payoff difference does not depend on state")
    e = (d - b) / denom
    if 0.0 < e < 1.0:
        return float(e)
    return None


def critical_delay_2x2(payoffs: PayoffMatrix) -> float:
    """Delay at which the mixed equilibrium loses stability: (pi/2) / (e (c - a))."""
    if not payoffs.is_snowdrift():
        raise RegimeError("critical delay is defined for snowdrift games (b > d, c > a)")
    e = interior_equilibrium_2x2(payoffs)
    if e is None:
        raise RegimeError("snowdrift game unexpectedly lacks an interior equilibrium")
    (a, _b), (c, _d) = payoffs.entries
    return (np.pi / 2.0) / (e * (c - a))


def average_delay(kernel: DelayKernel) -> float:
    """First moment of the lag distribution."""
    return float(kernel.weights @ kernel.lags)

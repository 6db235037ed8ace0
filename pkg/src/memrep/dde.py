"""Mean-field delay differential equations, integrated by explicit Euler.

The field is the net expected flow of the pairwise imitation rates; with the
payoff-comparison rule it reduces to the replicator field evaluated at the
kernel-averaged past state.  Explicit Euler with exact lagged lookups keeps
the scheme bit-comparable with the stochastic engine's grid; a step-doubling
check stands in for higher-order solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, InstabilityError
from .game import GameSpec, PayoffMatrix, _as_simplex, fitness
from .trajectory import Trajectory

# components may drift this far outside [0, 1] before we call the run unstable
_INSTABILITY_TOL = 1e-6
# renormalize once the simplex-sum drift exceeds the trajectory tolerance
_PROJECTION_TRIGGER = 1e-9

RatesFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


def replicator_field(current: np.ndarray, xbar: np.ndarray, payoffs: PayoffMatrix) -> np.ndarray:
    """F_i = x_i (f_i(xbar) - sum_k x_k f_k(xbar)); components sum to zero."""
    current = np.asarray(current, dtype=float)
    f = fitness(xbar, payoffs)
    return current * (f - current @ f)


def pairwise_rate_field(current: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Net flow per strategy from an ordered-pair rate matrix (row gains, col loses)."""
    rates = np.asarray(rates, dtype=float)
    return rates.sum(axis=1) - rates.sum(axis=0)


def constant_history(x, r: float, dt: float) -> np.ndarray:
    """Initial segment equal to x on the dt grid covering [-r, 0]."""
    x = _as_simplex(x)
    depth = _lag_steps(r, dt)
    return np.tile(x, (depth + 1, 1))


def _lag_steps(r: float, dt: float) -> int:
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    if r < 0:
        raise ConfigurationError("delay must be nonnegative")
    steps = round(r / dt)
    if abs(r / dt - steps) > 1e-9 * max(1.0, r / dt):
        raise ConfigurationError(f"delay r = {r} is not a multiple of dt = {dt}")
    return int(steps)


@dataclass(frozen=True)
class DdeProblem:
    """Game, initial segment on the dt grid over [-r, 0], step and horizon.

    `rates`, when given, replaces the replicator rule: a callable of
    (current, xbar) returning the ordered-pair rate matrix whose net flow is
    the field.  The maximal delay must be an exact multiple of dt.
    """

    game: GameSpec
    initial: np.ndarray
    dt: float
    horizon: float
    rates: RatesFunction | None = None

    def __post_init__(self):
        initial = np.asarray(self.initial, dtype=float)
        depth = _lag_steps(self.game.kernel.r, self.dt)
        if initial.ndim != 2 or initial.shape != (depth + 1, self.game.d):
            raise ConfigurationError(
                f"initial segment must have shape ({depth + 1}, {self.game.d}) "
                f"to cover [-r, 0] on the dt grid, got {initial.shape}")
        for row in initial:
            _as_simplex(row)
        if self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")
        initial.setflags(write=False)
        object.__setattr__(self, "initial", initial)

    @property
    def lag_depth(self) -> int:
        return self.initial.shape[0] - 1


def integrate(problem: DdeProblem) -> Trajectory:
    """Explicit Euler with lagged lookups on the integration grid.

    Each step checks the iterate stayed within the instability tolerance of
    the simplex, then clamps negative roundoff and renormalizes only once the
    drift of the component sum exceeds the trajectory tolerance, so clean runs
    are untouched arithmetic.  meta records the largest pre-projection drift.
    """
    game = problem.game
    depth = problem.lag_depth
    steps = int(np.ceil(problem.horizon / problem.dt - 1e-9))
    offsets = game.kernel.step_offsets(problem.dt)
    out = np.empty((depth + steps + 1, game.d), dtype=float)
    out[: depth + 1] = problem.initial
    max_step_drift = 0.0
    for k in range(depth, depth + steps):
        xbar = game.kernel.weights @ out[k - offsets]
        x = out[k]
        if problem.rates is None:
            f = replicator_field(x, xbar, game.payoffs)
        else:
            f = pairwise_rate_field(x, problem.rates(x, xbar))
        nxt = x + problem.dt * f
        lo, hi = nxt.min(), nxt.max()
        if lo < -_INSTABILITY_TOL or hi > 1.0 + _INSTABILITY_TOL:
            raise InstabilityError(
                f"component left [0, 1] by more than {_INSTABILITY_TOL} at "
                f"t = {(k - depth + 1) * problem.dt:.6g}; reduce dt")
        max_step_drift = max(max_step_drift, abs(nxt.sum() - x.sum()))
        if lo < 0.0 or abs(nxt.sum() - 1.0) > _PROJECTION_TRIGGER:
            nxt = np.maximum(nxt, 0.0)
            nxt = nxt / nxt.sum()
        out[k + 1] = nxt
    return Trajectory(
        t0=-depth * problem.dt,
        dt=problem.dt,
        points=out,
        kind="deterministic",
        meta={"max_step_drift": max_step_drift},
    )


def _resample_initial(initial: np.ndarray, factor: int) -> np.ndarray:
    """Linear resampling of the initial segment onto a factor-times-finer grid."""
    n = initial.shape[0]
    if n == 1:
        return initial.copy()
    coarse = np.arange(n, dtype=float)
    fine = np.arange((n - 1) * factor + 1, dtype=float) / factor
    return np.column_stack(
        [np.interp(fine, coarse, initial[:, j]) for j in range(initial.shape[1])])


def step_doubling_error(problem: DdeProblem) -> float:
    """Sup-norm gap at the horizon between the dt run and a dt/2 run.

    First-order scheme, so halving dt should roughly halve this.
    """
    half = DdeProblem(
        game=problem.game,
        initial=_resample_initial(np.asarray(problem.initial), 2),
        dt=problem.dt / 2.0,
        horizon=problem.horizon,
        rates=problem.rates,
    )
    coarse = integrate(problem)
    fine = integrate(half)
    return float(np.abs(coarse.points[-1] - fine.points[-1]).max())

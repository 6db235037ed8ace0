"""Reference implementation of the finite-population imitation process.

One individual per step gets a revision opportunity at times 0, delta,
2*delta, ... with delta = 1/N.  The probability that a j-strategist becomes an
i-strategist is x_i x_j [f_i(xbar) - f_j(xbar)]_+ where xbar is the
kernel-weighted average of the last m+1 population states.  This module is
written for clarity and works for any strategy count; `memrep.fast` provides
a drop-in accelerated path for two-strategy games.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, InvalidHistoryError, PayoffScaleError
from .game import GameSpec, fitness
from .trajectory import Trajectory

HistoryFunction = Callable[[float], np.ndarray]


def round_to_grid(x, N: int) -> np.ndarray:
    """Closest integer count vector summing to N (largest-remainder method).

    Minimizes the L1 distance to x*N among sum-preserving roundings; ties are
    broken by giving the extra unit to the lowest strategy index.
    """
    x = np.asarray(x, dtype=float)
    scaled = x * N
    counts = np.floor(scaled).astype(np.int64)
    remainder = scaled - counts
    missing = N - int(counts.sum())
    if missing < 0 or missing > x.size:
        raise ConfigurationError(f"cannot round {x} onto the 1/{N} grid")
    order = sorted(range(x.size), key=lambda i: (-remainder[i], i))
    for i in order[:missing]:
        counts[i] += 1
    return counts


class PopulationState:
    """Integer strategy counts plus a ring buffer of the last m+1 grid states.

    The ring stores counts; frequencies are counts / N.  Entry at lag k*delta
    sits at ring index (head - k) mod (m + 1).
    """

    def __init__(self, counts: np.ndarray, m: int, ring: np.ndarray | None = None):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 2 or np.any(counts < 0):
            raise ConfigurationError("counts must be a nonnegative vector of length >= 2")
        self.counts = counts.copy()
        self.N = int(counts.sum())
        if self.N < 2:
            raise ConfigurationError("population size must be at least 2")
        if m < 0:
            raise ConfigurationError("history depth m must be nonnegative")
        self.m = int(m)
        if ring is None:
            ring = np.tile(self.counts, (self.m + 1, 1))
        self.ring = np.asarray(ring, dtype=np.int64).copy()
        if self.ring.shape != (self.m + 1, counts.size):
            raise ConfigurationError("history ring must have shape (m + 1, d)")
        self.head = self.m  # ring rows are oldest..newest at construction
        self.tau = 0

    @property
    def d(self) -> int:
        return self.counts.size

    @property
    def delta(self) -> float:
        return 1.0 / self.N

    def frequency(self) -> np.ndarray:
        return self.counts / self.N

    def history_counts(self) -> np.ndarray:
        """History rows ordered oldest to newest (lag m down to 0)."""
        idx = (self.head - np.arange(self.m, -1, -1)) % (self.m + 1)
        return self.ring[idx]

    def history_frequencies(self) -> np.ndarray:
        return self.history_counts() / self.N

    def absorbed_vertex(self) -> int | None:
        hits = np.nonzero(self.counts == self.N)[0]
        return int(hits[0]) if hits.size else None

    def push(self, counts: np.ndarray) -> None:
        self.head = (self.head + 1) % (self.m + 1)
        self.ring[self.head] = counts
        self.counts = np.asarray(counts, dtype=np.int64).copy()
        self.tau += 1

    def copy(self) -> "PopulationState":
        dup = PopulationState(self.counts, self.m, ring=self.ring)
        dup.head = self.head
        dup.tau = self.tau
        return dup

    def check_invariants(self) -> None:
        assert int(self.counts.sum()) == self.N
        hist = self.history_frequencies()
        steps = np.abs(np.diff(hist, axis=0)).max(axis=1) if self.m else np.array([])
        if steps.size and steps.max() > 2.0 * self.delta + 1e-15:
            raise AssertionError("history violates the one-revision-per-step bound")
        assert np.array_equal(self.ring[self.head], self.counts)


@dataclass(frozen=True)
class StepOutcome:
    """What a single revision opportunity did."""

    kind: str  # "imitation" | "no_change" | "absorbed"
    to_strategy: int | None = None
    from_strategy: int | None = None
    vertex: int | None = None


@dataclass(frozen=True)
class FixationOutcome:
    """First hit of a simplex vertex, in steps and in process time (steps/N)."""

    steps: int
    time: float
    vertex: int | None
    timed_out: bool


def init_constant_history(initial, N: int, m: int) -> PopulationState:
    """All m+1 history entries equal to the grid rounding of `initial`."""
    counts = round_to_grid(initial, N)
    return PopulationState(counts, m)


def init_from_function(phi, N: int, m: int) -> PopulationState:
    """History sampled from phi at lags -m*delta..0 and rounded to the grid.

    phi is either a callable of time (evaluated at k*delta for k = -m..0) or
    an array of m+1 rows, oldest first.  Grid roundings must still move by at
    most one revision per step, else the history is not realizable.
    """
    delta = 1.0 / N
    if callable(phi):
        rows = [np.asarray(phi(k * delta), dtype=float) for k in range(-m, 1)]
    else:
        rows = list(np.asarray(phi, dtype=float))
        if len(rows) != m + 1:
            raise ConfigurationError(f"history needs m + 1 = {m + 1} rows, got {len(rows)}")
    ring = np.array([round_to_grid(row, N) for row in rows])
    jumps = np.abs(np.diff(ring, axis=0)).max(axis=1) if m else np.array([])
    if jumps.size and jumps.max() > 2:
        raise InvalidHistoryError(
            "initial function moves faster than one imitation per step "
            f"(max jump {jumps.max()} individuals, allowed 2)")
    return PopulationState(ring[-1], m, ring=ring)


def validate_payoff_scale(game: GameSpec) -> None:
    """Reject games whose worst-case total imitation mass could exceed 1.

    Per ordered pair, x_i x_j <= 1/4 and [f_i - f_j]_+ is bounded by the
    payoff spread, so d(d-1)/2 pairs of opposite-sign differences give the
    worst case (for d = 2 the two directions are mutually exclusive).
    """
    spread = game.payoffs.max_pairwise_gain()
    pairs = 1 if game.d == 2 else game.d * (game.d - 1) // 2
    bound = pairs * 0.25 * spread * game.rate_scale
    if bound > 1.0:
        raise PayoffScaleError(
            f"worst-case imitation mass {bound:.6g} exceeds 1; "
            f"rescale payoffs or set rate_scale <= {1.0 / (bound / game.rate_scale):.6g}")


def delayed_state_average(state: PopulationState, game: GameSpec) -> np.ndarray:
    """Kernel average of the state's history on the delta = 1/N grid."""
    offsets = game.kernel.step_offsets(state.delta)
    if offsets[-1] > state.m:
        raise ConfigurationError(
            f"kernel lag {game.kernel.r} needs m >= {offsets[-1]}, state has m = {state.m}")
    idx = (state.head - offsets) % (state.m + 1)
    return game.kernel.weights @ (state.ring[idx] / state.N)


def imitation_probabilities(state: PopulationState, game: GameSpec) -> dict[tuple[int, int], float]:
    """Probability of each ordered transition (j-strategist becomes i-strategist).

    Keys are (i, j) with i != j; the residual 1 - sum is the no-change
    probability.  Zero counts force zeros, so vertices are absorbing.
    """
    xbar = delayed_state_average(state, game)
    f = fitness(xbar, game.payoffs)
    x = state.frequency()
    probs: dict[tuple[int, int], float] = {}
    total = 0.0
    for i in range(state.d):
        for j in range(state.d):
            if i == j:
                continue
            diff = f[i] - f[j]
            p = x[i] * x[j] * diff * game.rate_scale if diff > 0.0 else 0.0
            probs[(i, j)] = p
            total += p
    if total > 1.0:
        raise PayoffScaleError(
            f"imitation mass {total:.6g} exceeds 1 at state {state.counts}")
    return probs


def _select_outcome(pairs, probs, u: float):
    """Single-uniform selection over ordered pairs laid out in the given order."""
    acc = 0.0
    for pair, p in zip(pairs, probs):
        acc += p
        if u < acc:
            return pair
    return None


def step(state: PopulationState, game: GameSpec, rng) -> StepOutcome:
    """One revision opportunity: exactly one uniform draw, ordered-pair layout.

    Ordered pairs are scanned lexicographically, matching the two-strategy
    branch order (strategy-1-gains first); the remainder maps to no change.
    """
    probs = imitation_probabilities(state, game)
    pairs = sorted(probs)
    u = rng.random()
    chosen = _select_outcome(pairs, [probs[p] for p in pairs], u)
    if chosen is None:
        state.push(state.counts)
        vertex = state.absorbed_vertex()
        if vertex is not None:
            return StepOutcome(kind="absorbed", vertex=vertex)
        return StepOutcome(kind="no_change")
    i, j = chosen
    counts = state.counts.copy()
    counts[i] += 1
    counts[j] -= 1
    state.push(counts)
    return StepOutcome(kind="imitation", to_strategy=i, from_strategy=j)


def run(state: PopulationState, game: GameSpec, rng, horizon: float) -> Trajectory:
    """Drive the chain for ceil(horizon * N) steps, recording every grid state.

    The returned trajectory includes the m+1 history entries, so it starts at
    t = -m*delta.  Absorbed states self-loop (and still consume one draw per
    step) so the trajectory always has its full length.
    """
    if horizon <= 0:
        raise ConfigurationError("horizon must be positive")
    validate_payoff_scale(game)
    steps = int(np.ceil(horizon * state.N - 1e-9))
    out = np.empty((state.m + 1 + steps, state.d), dtype=np.int64)
    out[: state.m + 1] = state.history_counts()
    tau0 = state.tau
    absorbed_at = 0.0 if state.absorbed_vertex() is not None else None
    for k in range(steps):
        step(state, game, rng)
        out[state.m + 1 + k] = state.counts
        if absorbed_at is None and state.absorbed_vertex() is not None:
            absorbed_at = (state.tau - tau0) * state.delta
    return Trajectory(
        t0=-state.m * state.delta,
        dt=state.delta,
        points=out / state.N,
        kind="stochastic",
        absorbed_at=absorbed_at,
        meta={"N": state.N, "m": state.m},
    )


def fixation_time(state: PopulationState, game: GameSpec, rng, cap: int) -> FixationOutcome:
    """First step index at which the whole population adopts one strategy.

    Timeouts (cap steps reached without absorption) are reported distinctly,
    never folded into a mean.
    """
    if cap <= 0:
        raise ConfigurationError("step cap must be positive")
    validate_payoff_scale(game)
    vertex = state.absorbed_vertex()
    if vertex is not None:
        return FixationOutcome(steps=0, time=0.0, vertex=vertex, timed_out=False)
    for k in range(1, cap + 1):
        step(state, game, rng)
        vertex = state.absorbed_vertex()
        if vertex is not None:
            return FixationOutcome(steps=k, time=k / state.N, vertex=vertex,
                                   timed_out=False)
    return FixationOutcome(steps=cap, time=cap / state.N, vertex=None, timed_out=True)

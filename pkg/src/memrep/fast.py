"""Accelerated two-strategy engine (numba), drop-in for the reference loops.

The kernels mirror `memrep.stochastic` step for step: the same single uniform
draw per revision opportunity, the same branch order (strategy-1-gains
tested first), and the same count/ring bookkeeping, just specialized to d = 2
and compiled.  The reference engine remains the executable semantics; the
test suite drives both from one uniform stream and compares paths.

Uniforms are consumed in chunks of a fixed size so that a replicate's draw
sequence depends only on its generator, never on timing or thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ConfigurationError
from .game import GameSpec
from .stochastic import FixationOutcome, PopulationState, validate_payoff_scale
from .trajectory import Trajectory

_CHUNK = 1 << 16


@njit(cache=True, nogil=True)
def _trajectory_block(n, N, ring, head, lag_steps, weights, a, b, c, d, scale,
                      uniforms, out, out_start):
    """Advance len(uniforms) steps, recording each new count of strategy 0."""
    m1 = ring.shape[0]
    L = lag_steps.shape[0]
    for k in range(uniforms.shape[0]):
        zb0 = 0.0
        zb1 = 0.0
        for j in range(L):
            idx = head - lag_steps[j]
            if idx < 0:
                idx += m1
            zb0 += weights[j] * (ring[idx] / N)
            zb1 += weights[j] * ((N - ring[idx]) / N)
        fa = a * zb0 + b * zb1
        fb = c * zb0 + d * zb1
        diff = fa - fb
        z0 = n / N
        z1 = (N - n) / N
        u = uniforms[k]
        if diff > 0.0:
            if u < z0 * z1 * diff * scale:
                n += 1
        elif diff < 0.0:
            if u < z0 * z1 * (-diff) * scale:
                n -= 1
        head += 1
        if head == m1:
            head = 0
        ring[head] = n
        out[out_start + k] = n
    return n, head


@njit(cache=True, nogil=True)
def _fixation_block(n, N, ring, head, lag_steps, weights, a, b, c, d, scale,
                    uniforms, max_steps):
    """Advance until absorption, max_steps, or the uniforms run out.

    Returns (steps_taken, vertex or -1, n, head); vertex is set only when
    absorption happened within this block.
    """
    m1 = ring.shape[0]
    L = lag_steps.shape[0]
    limit = min(max_steps, uniforms.shape[0])
    for k in range(limit):
        zb0 = 0.0
        zb1 = 0.0
        for j in range(L):
            idx = head - lag_steps[j]
            if idx < 0:
                idx += m1
            zb0 += weights[j] * (ring[idx] / N)
            zb1 += weights[j] * ((N - ring[idx]) / N)
        fa = a * zb0 + b * zb1
        fb = c * zb0 + d * zb1
        diff = fa - fb
        z0 = n / N
        z1 = (N - n) / N
        u = uniforms[k]
        if diff > 0.0:
            if u < z0 * z1 * diff * scale:
                n += 1
        elif diff < 0.0:
            if u < z0 * z1 * (-diff) * scale:
                n -= 1
        head += 1
        if head == m1:
            head = 0
        ring[head] = n
        if n == 0:
            return k + 1, 1, n, head
        if n == N:
            return k + 1, 0, n, head
    return limit, -1, n, head


def _unpack(state: PopulationState, game: GameSpec):
    if state.d != 2 or game.d != 2:
        raise ConfigurationError("fast engine handles two-strategy games only")
    lag_steps = game.kernel.step_offsets(state.delta)
    if lag_steps[-1] > state.m:
        raise ConfigurationError(
            f"kernel lag {game.kernel.r} needs m >= {lag_steps[-1]}, state has m = {state.m}")
    ring = state.history_counts()[:, 0].copy()  # oldest..newest, so head = m
    (a, b), (c, d) = game.payoffs.entries
    return ring, lag_steps, np.asarray(game.kernel.weights, dtype=float), a, b, c, d


def _write_back(state: PopulationState, ring0: np.ndarray, head: int, n: int, steps: int) -> None:
    ring = np.column_stack([ring0, state.N - ring0])
    state.ring = ring
    state.head = head
    state.counts = np.array([n, state.N - n], dtype=np.int64)
    state.tau += steps


def run_trajectory(state: PopulationState, game: GameSpec, rng, horizon: float) -> Trajectory:
    """Accelerated equivalent of `stochastic.run` for two-strategy games."""
    if horizon <= 0:
        raise ConfigurationError("horizon must be positive")
    validate_payoff_scale(game)
    ring, lag_steps, weights, a, b, c, d = _unpack(state, game)
    N, m = state.N, state.m
    steps = int(np.ceil(horizon * N - 1e-9))
    counts0 = np.empty(m + 1 + steps, dtype=np.int64)
    counts0[: m + 1] = ring
    n, head = int(state.counts[0]), m
    done = 0
    while done < steps:
        block = min(_CHUNK, steps - done)
        n, head = _trajectory_block(n, N, ring, head, lag_steps, weights,
                                    a, b, c, d, game.rate_scale,
                                    rng.random(block), counts0, m + 1 + done)
        done += block
    _write_back(state, ring, head, n, steps)
    body = counts0[m:]
    absorbed_idx = np.nonzero((body == 0) | (body == N))[0]
    absorbed_at = absorbed_idx[0] / N if absorbed_idx.size else None
    points = np.column_stack([counts0, N - counts0]) / N
    return Trajectory(
        t0=-m / N,
        dt=1.0 / N,
        points=points,
        kind="stochastic",
        absorbed_at=absorbed_at,
        meta={"N": N, "m": m},
    )


def fixation(state: PopulationState, game: GameSpec, rng, cap: int) -> FixationOutcome:
    """Accelerated equivalent of `stochastic.fixation_time`."""
    if cap <= 0:
        raise ConfigurationError("step cap must be positive")
    validate_payoff_scale(game)
    vertex = state.absorbed_vertex()
    if vertex is not None:
        return FixationOutcome(steps=0, time=0.0, vertex=vertex, timed_out=False)
    ring, lag_steps, weights, a, b, c, d = _unpack(state, game)
    N = state.N
    n, head = int(state.counts[0]), state.m
    done = 0
    while done < cap:
        block = rng.random(min(_CHUNK, cap - done))
        took, vert, n, head = _fixation_block(n, N, ring, head, lag_steps, weights,
                                              a, b, c, d, game.rate_scale,
                                              block, cap - done)
        done += took
        if vert >= 0:
            _write_back(state, ring, head, n, done)
            return FixationOutcome(steps=done, time=done / N, vertex=vert, timed_out=False)
    _write_back(state, ring, head, n, done)
    return FixationOutcome(steps=cap, time=cap / N, vertex=None, timed_out=True)

"""Independent oracles and small utilities shared by the test modules.

Everything here is deliberately separate from the library's own code paths:
brute-force enumeration, a plain Euler loop, Lambert-W roots, and an
argument-principle root counter.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import scipy.special

from memrep import GameSpec, imitation_probabilities
from memrep.stochastic import PopulationState


class Replay:
    """Serves a fixed uniform stream through the Generator .random() interface."""

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values, dtype=float)
        self.used = 0

    def random(self, n: int | None = None):
        if n is None:
            value = self.values[self.used]
            self.used += 1
            return float(value)
        block = self.values[self.used: self.used + n]
        if block.size != n:
            raise RuntimeError("replay stream exhausted")
        self.used += n
        return block.copy()


def brute_force_rounding(x, N: int) -> np.ndarray:
    """All sum-N integer roundings of x*N within one unit per component;
    minimal L1 distance (exact rational arithmetic), ties broken toward
    putting surplus at low indices."""
    x = np.asarray(x, dtype=float)
    scaled_f = x * N  # same float grid the implementation sees
    scaled = [Fraction(float(s)) for s in scaled_f]
    lo = np.floor(scaled_f).astype(int)
    best = None
    for bump in itertools.product((0, 1), repeat=x.size):
        cand = lo + np.array(bump)
        if cand.sum() != N:
            continue
        l1 = sum(abs(Fraction(int(c)) - s) for c, s in zip(cand, scaled))
        key = (l1, tuple(-cand))  # lexicographically largest wins ties
        if best is None or key < best[0]:
            best = (key, cand)
    assert best is not None
    return best[1]


def euler_replicator(x0: np.ndarray, entries: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """Memoryless Euler replicator loop, written independently of the library."""
    x = np.asarray(x0, dtype=float).copy()
    out = [x.copy()]
    for _ in range(steps):
        f = entries @ x
        x = x + dt * (x * (f - x @ f))
        out.append(x.copy())
    return np.array(out)


def enumerate_outcome_sequences(state: PopulationState, game: GameSpec, steps: int):
    """Exact probability of every outcome sequence of the given length.

    Sequence entries are ordered pairs (i, j) for an imitation or None for no
    change.  Probabilities come from the transition law; the tree expansion
    is exhaustive, so they sum to 1.
    """
    dist: dict[tuple, float] = {}

    def expand(current: PopulationState, depth: int, prob: float, seq: tuple):
        if depth == steps:
            dist[seq] = dist.get(seq, 0.0) + prob
            return
        probs = imitation_probabilities(current, game)
        residual = 1.0
        for (i, j), p in sorted(probs.items()):
            residual -= p
            if p > 0.0:
                nxt = current.copy()
                counts = nxt.counts.copy()
                counts[i] += 1
                counts[j] -= 1
                nxt.push(counts)
                expand(nxt, depth + 1, prob * p, seq + ((i, j),))
        if residual > 0.0:
            nxt = current.copy()
            nxt.push(nxt.counts)
            expand(nxt, depth + 1, prob * residual, seq + (None,))

    expand(state.copy(), 0, 1.0, ())
    return dist


def final_count_distribution(state: PopulationState, game: GameSpec, steps: int):
    """Exact distribution of the strategy-0 count after the given steps."""
    dist: dict[int, float] = {}
    for seq, prob in enumerate_outcome_sequences(state, game, steps).items():
        n = int(state.counts[0])
        for entry in seq:
            if entry is not None:
                i, j = entry
                n += (1 if i == 0 else 0) - (1 if j == 0 else 0)
        dist[n] = dist.get(n, 0.0) + prob
    return dist


def lambertw_leading_root(beta: float, r: float) -> complex:
    """Closed-form leading root of lambda + beta exp(-r lambda) = 0."""
    if r == 0:
        return complex(-beta)
    root = scipy.special.lambertw(-beta * r, 0) / r
    return complex(root.real, abs(root.imag))


def right_half_plane_roots(beta: float, lags, weights, samples: int = 200_000) -> int:
    """Argument-principle count of characteristic roots with Re > 0.

    Any such root has modulus at most beta, so a rectangle of half-width
    beta + 0.5 suffices.  The winding number is computed from the unwrapped
    phase of g along the boundary.
    """
    lags = np.asarray(lags, dtype=float)
    weights = np.asarray(weights, dtype=float)
    R = beta + 0.5
    corners = [0 - 1j * R, R - 1j * R, R + 1j * R, 0 + 1j * R, 0 - 1j * R]
    zs = np.concatenate([
        np.linspace(corners[k], corners[k + 1], samples, endpoint=False)
        for k in range(4)
    ])
    g = zs + beta * (np.exp(-np.outer(zs, lags)) @ weights)
    phases = np.unwrap(np.angle(g))
    total = phases[-1] - phases[0]
    closing = np.angle(g[0] / g[-1])  # jump from the last sample back to the start
    return round((total + closing) / (2 * np.pi))

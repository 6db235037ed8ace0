"""Quantitative bridge between the stochastic and deterministic engines.

Covers the maximal-deviation statistic and its tail trend over population
size, time averages of oscillatory runs, fixation-time scaling with a
log-linear fit, and linear stability of the mixed equilibrium through the
characteristic equation of the linearized delayed dynamics.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import fast
from .dde import DdeProblem, constant_history, integrate
from .errors import ConfigurationError, RegimeError, RootFindingError
from .game import (DelayKernel, GameSpec, _as_simplex, average_delay,
                   interior_equilibrium_2x2)
from .stochastic import (FixationOutcome, fixation_time, init_from_function, run)
from .trajectory import Trajectory

# amplitude below this counts as "converged" in Hopf scans
AMPLITUDE_TOL = 1e-3
# final fraction of the horizon used as the amplitude window
AMPLITUDE_WINDOW = 0.25
# a per-N timeout fraction above this flags the fixation report
TIMEOUT_FLAG_FRACTION = 0.05

_GRID_TOL = 1e-9


def replicate_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent, reproducible generator for one replicate of one experiment."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))


def _map_jobs(fn: Callable[[int], object], count: int, jobs: int | None) -> list:
    if jobs is None or jobs <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(count)))


def _as_history_callable(phi) -> Callable[[float], np.ndarray]:
    if callable(phi):
        return lambda t: np.asarray(phi(t), dtype=float)
    vec = _as_simplex(phi)
    return lambda _t: vec


def _simulate(state, game: GameSpec, rng, horizon: float) -> Trajectory:
    if state.d == 2:
        return fast.run_trajectory(state, game, rng, horizon)
    return run(state, game, rng, horizon)


def _fixate(state, game: GameSpec, rng, cap: int) -> FixationOutcome:
    if state.d == 2:
        return fast.fixation(state, game, rng, cap)
    return fixation_time(state, game, rng, cap)


# ---------------------------------------------------------------------------
# deviation statistic


def deviation(first: Trajectory, second: Trajectory, horizon: float) -> float:
    """Max-norm distance of two interpolated paths over [0, horizon].

    Both paths are piecewise linear, so the maximum over the union grid is
    the maximum over the whole interval.  One grid step must divide the
    other.
    """
    if horizon <= 0:
        raise ConfigurationError("deviation horizon must be positive")
    for traj in (first, second):
        if traj.t0 > 1e-12 or traj.end < horizon - 1e-9 * max(1.0, horizon):
            raise ConfigurationError(
                f"trajectory on [{traj.t0}, {traj.end}] does not cover [0, {horizon}]")
    step_fine, step_coarse = sorted((first.dt, second.dt))
    ratio = step_coarse / step_fine
    if abs(ratio - round(ratio)) > _GRID_TOL * ratio:
        raise ConfigurationError(
            f"incompatible grids: neither step divides the other ({first.dt}, {second.dt})")
    steps = horizon / step_fine
    n = int(np.floor(steps + 1e-9 * max(1.0, steps)))
    times = step_fine * np.arange(n + 1)  # union grid: the finer of the two
    if times[-1] < horizon - 1e-9 * max(1.0, horizon):
        times = np.append(times, horizon)
    gap = 0.0
    for j in range(first.d):
        a = np.interp(times, first.times(), first.points[:, j])
        b = np.interp(times, second.times(), second.points[:, j])
        gap = max(gap, float(np.abs(a - b).max()))
    return gap


@dataclass
class DeviationReport:
    """Empirical tail of the deviation statistic across population sizes."""

    n_values: list[int]
    epsilon: float
    replicates: int
    horizon: float
    deviations: dict[int, np.ndarray]
    tail_probability: dict[int, float]
    floored: dict[int, bool]
    fit_slope: float
    fit_intercept: float

    def tail_nonincreasing(self) -> bool:
        probs = [self.tail_probability[n] for n in self.n_values]
        return all(probs[i] >= probs[i + 1] for i in range(len(probs) - 1))


def deviation_tail_estimate(game: GameSpec, phi, n_values: Sequence[int], epsilon: float,
                            horizon: float, replicates: int, seed: int, *,
                            dt: float = 0.01, jobs: int | None = None) -> DeviationReport:
    """Estimate Pr[D >= epsilon] per population size and fit log Pr against N.

    The mean-field path is integrated once from phi; each stochastic
    replicate starts from the grid rounding of the same phi.  Exact-zero
    tails are floored at 1/replicates before the log fit.
    """
    phi_fn = _as_history_callable(phi)
    r = game.kernel.r
    depth = round(r / dt)
    initial = np.array([phi_fn(-r + k * dt) for k in range(depth + 1)])
    det = integrate(DdeProblem(game=game, initial=initial, dt=dt, horizon=horizon))
    deviations: dict[int, np.ndarray] = {}
    tails: dict[int, float] = {}
    floored: dict[int, bool] = {}
    for N in n_values:
        m = _delay_steps(r, N)

        def one(rep: int, N=N, m=m) -> float:
            state = init_from_function(phi_fn, N, m)
            traj = _simulate(state, game, replicate_rng(seed, N, rep), horizon)
            return deviation(traj, det, horizon)

        d_vals = np.array(_map_jobs(one, replicates, jobs))
        deviations[N] = d_vals
        tails[N] = float((d_vals >= epsilon).mean())
        floored[N] = tails[N] == 0.0
    floor = 1.0 / replicates
    ys = np.log([max(tails[N], floor) for N in n_values])
    if len(n_values) >= 2:
        slope, intercept = np.polyfit(np.asarray(n_values, dtype=float), ys, 1)
    else:
        slope = intercept = float("nan")
    return DeviationReport(
        n_values=list(n_values), epsilon=epsilon, replicates=replicates,
        horizon=horizon, deviations=deviations, tail_probability=tails,
        floored=floored, fit_slope=float(slope), fit_intercept=float(intercept))


def _delay_steps(r: float, N: int) -> int:
    m = round(r * N)
    if abs(r * N - m) > _GRID_TOL * max(1.0, r * N):
        raise ConfigurationError(f"delay r = {r} is not a whole number of steps for N = {N}")
    return int(m)


# ---------------------------------------------------------------------------
# time averages


def _span_indices(traj: Trajectory, horizon: float) -> tuple[int, int]:
    if traj.t0 > 1e-12 or traj.end < horizon - 1e-9 * max(1.0, horizon):
        raise ConfigurationError(
            f"trajectory on [{traj.t0}, {traj.end}] does not cover [0, {horizon}]")
    i0 = traj.index_of(0.0)
    ratio = (horizon - traj.t0) / traj.dt
    k = int(np.floor(ratio + 1e-9 * max(1.0, ratio)))
    return i0, min(k, len(traj.points) - 1)


def time_average(traj: Trajectory, horizon: float) -> np.ndarray:
    """Average of the path over [0, horizon].

    Trapezoid rule for deterministic trajectories; plain average of the grid
    states (exact integer count sums) for stochastic ones.
    """
    i0, k = _span_indices(traj, horizon)
    if traj.kind == "stochastic":
        pts = traj.points[i0: k + 1]
        N = traj.meta.get("N")
        if N:
            counts = np.rint(pts * N).astype(np.int64)
            return counts.sum(axis=0) / (len(counts) * N)
        return pts.mean(axis=0)
    tk = traj.t0 + k * traj.dt
    area = np.trapezoid(traj.points[i0: k + 1], dx=traj.dt, axis=0)
    if tk < horizon - 1e-9 * max(1.0, horizon):
        tail = traj.value_at(horizon)
        area += 0.5 * (horizon - tk) * (traj.points[k] + tail)
    return area / horizon


def exact_grid_average(traj: Trajectory, horizon: float) -> list[Fraction]:
    """Rational average of a stochastic run's grid states over [0, horizon]."""
    if traj.kind != "stochastic" or "N" not in traj.meta:
        raise ConfigurationError("exact averages need a stochastic trajectory with known N")
    i0, k = _span_indices(traj, horizon)
    N = traj.meta["N"]
    counts = np.rint(traj.points[i0: k + 1] * N).astype(np.int64)
    total = counts.sum(axis=0)
    denom = len(counts) * N
    return [Fraction(int(c), denom) for c in total]


@dataclass
class RunningAverageReport:
    """Concentration of running averages around the equalizer across N."""

    n_values: list[int]
    tau: float
    epsilon: float
    center: np.ndarray
    replicates: int
    averages: dict[int, np.ndarray]       # (replicates, d)
    outside_fraction: dict[int, float]

    def fraction_nonincreasing(self) -> bool:
        fr = [self.outside_fraction[n] for n in self.n_values]
        return all(fr[i] >= fr[i + 1] for i in range(len(fr) - 1))


def running_average_exit_fraction(game: GameSpec, phi, n_values: Sequence[int], tau: float,
                                  center, epsilon: float, replicates: int, seed: int, *,
                                  jobs: int | None = None) -> RunningAverageReport:
    """Fraction of replicates whose running average at tau leaves the epsilon ball."""
    phi_fn = _as_history_callable(phi)
    center = _as_simplex(center)
    averages: dict[int, np.ndarray] = {}
    fractions: dict[int, float] = {}
    for N in n_values:
        m = _delay_steps(game.kernel.r, N)

        def one(rep: int, N=N, m=m) -> np.ndarray:
            state = init_from_function(phi_fn, N, m)
            traj = _simulate(state, game, replicate_rng(seed, N, rep), tau)
            return time_average(traj, tau)

        avg = np.array(_map_jobs(one, replicates, jobs))
        averages[N] = avg
        fractions[N] = float((np.abs(avg - center).max(axis=1) > epsilon).mean())
    return RunningAverageReport(
        n_values=list(n_values), tau=tau, epsilon=epsilon, center=center,
        replicates=replicates, averages=averages, outside_fraction=fractions)


# ---------------------------------------------------------------------------
# fixation scaling


@dataclass
class FixationReport:
    """Per-N fixation-time statistics and the log-linear fit against N."""

    n_values: list[int]
    replicates: int
    cap_steps: int
    outcomes: dict[int, list[FixationOutcome]]
    mean_time: dict[int, float]
    median_time: dict[int, float]
    stderr_time: dict[int, float]
    timeout_count: dict[int, int]
    slope: float
    intercept: float
    r_squared: float
    flagged: list[int] = field(default_factory=list)


def fixation_scaling(game: GameSpec, initial, n_values: Sequence[int], replicates: int,
                     cap_steps: int, seed: int, *, jobs: int | None = None) -> FixationReport:
    """Mean fixation times over an N grid with a least-squares fit of log(mean).

    Population sizes at which the equalizer lies exactly on the count grid
    are rejected up front: the chain can freeze there without absorbing.
    Means use non-timeout replicates only; any N with more than 5% timeouts
    flags the report (its mean is then a lower-bound estimate).
    """
    if game.d == 2:
        e = interior_equilibrium_2x2(game.payoffs)
        if e is not None:
            for N in n_values:
                if abs(e * N - round(e * N)) < _GRID_TOL * N:
                    raise ConfigurationError(
                        f"N = {N} puts the equalizer {e:.6g} on the count grid "
                        "(frozen states possible); drop it from the grid")
    phi_fn = _as_history_callable(initial)
    outcomes: dict[int, list[FixationOutcome]] = {}
    for N in n_values:
        m = _delay_steps(game.kernel.r, N)

        def one(rep: int, N=N, m=m) -> FixationOutcome:
            state = init_from_function(phi_fn, N, m)
            return _fixate(state, game, replicate_rng(seed, N, rep), cap_steps)

        outcomes[N] = _map_jobs(one, replicates, jobs)
    mean_t, med_t, se_t, tout = {}, {}, {}, {}
    flagged = []
    for N in n_values:
        times = np.array([o.time for o in outcomes[N] if not o.timed_out])
        tout[N] = sum(o.timed_out for o in outcomes[N])
        if tout[N] > TIMEOUT_FLAG_FRACTION * replicates:
            flagged.append(N)
        if times.size:
            mean_t[N] = float(times.mean())
            med_t[N] = float(np.median(times))
            se_t[N] = float(times.std(ddof=1) / np.sqrt(times.size)) if times.size > 1 else 0.0
        else:
            mean_t[N] = med_t[N] = se_t[N] = float("nan")
    xs = np.array([N for N in n_values if mean_t[N] > 0 and np.isfinite(mean_t[N])], dtype=float)
    ys = np.log([mean_t[int(N)] for N in xs])
    if xs.size >= 2:
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    else:
        slope = intercept = r2 = float("nan")
    return FixationReport(
        n_values=list(n_values), replicates=replicates, cap_steps=cap_steps,
        outcomes=outcomes, mean_time=mean_t, median_time=med_t, stderr_time=se_t,
        timeout_count=tout, slope=float(slope), intercept=float(intercept),
        r_squared=float(r2), flagged=flagged)


# ---------------------------------------------------------------------------
# linear stability


def _char_pair(lam: complex, beta: float, lags: np.ndarray, weights: np.ndarray):
    # very negative Re(lam) trial points overflow exp; inf/nan just means "reject"
    with np.errstate(over="ignore", invalid="ignore"):
        ew = np.exp(-lam * lags)
        g = lam + beta * (weights @ ew)
        gp = 1.0 - beta * ((weights * lags) @ ew)
    return g, gp


def _newton_polish(lam: complex, beta: float, lags, weights, tol: float,
                   iters: int = 80) -> tuple[complex, bool]:
    for _ in range(iters):
        g, gp = _char_pair(lam, beta, lags, weights)
        if abs(g) <= tol:
            return lam, True
        if abs(gp) < 1e-10:
            # near a double root the branch leaves the real axis; nudge off it
            lam = lam + 1e-4j * (1.0 + abs(lam))
            continue
        step = g / gp
        damp = 1.0
        while damp > 1e-8:
            trial = lam - damp * step
            gt, _ = _char_pair(trial, beta, lags, weights)
            if np.isfinite(abs(gt)) and abs(gt) < abs(g):
                lam = trial
                break
            damp /= 2.0
        else:
            lam = lam + 1e-4j * (1.0 + abs(lam))
    g, _ = _char_pair(lam, beta, lags, weights)
    return lam, abs(g) <= tol


def characteristic_root(beta: float, kernel: DelayKernel, *,
                        residual_tol: float = 1e-10) -> complex:
    """Leading root of lambda + beta * sum_j w_j exp(-lambda * lag_j) = 0.

    Damped Newton seeded from the memoryless limit (lambda = -beta) and
    continued in the delay scale from 0 to 1; the tracked branch is the one
    whose real part governs stability.  Roots with nonzero imaginary part are
    returned with imag >= 0 (the conjugate also solves the equation).
    """
    if beta <= 0:
        raise RegimeError("characteristic equation is parameterized for beta > 0")
    lags = np.asarray(kernel.lags, dtype=float)
    weights = np.asarray(kernel.weights, dtype=float)
    if kernel.r == 0.0:
        return complex(-beta)
    lam = complex(-beta)
    s, ds = 0.0, 1.0 / 16.0
    while s < 1.0:
        target = min(1.0, s + ds)
        cand, ok = _newton_polish(lam, beta, lags * target, weights, residual_tol)
        if ok:
            lam, s = cand, target
            ds = min(ds * 1.5, 1.0 / 8.0)
        else:
            ds /= 2.0
            if ds < 1.0 / 8192.0:
                raise RootFindingError(
                    f"root continuation stalled at scale {s:.4g} for beta = {beta}")
    if lam.imag < 0:
        lam = lam.conjugate()
    if abs(lam.imag) < 1e-12:
        lam = complex(lam.real, 0.0)
    g, _ = _char_pair(lam, beta, lags, weights)
    if abs(g) > residual_tol:
        raise RootFindingError(f"characteristic root residual {abs(g):.3g} above tolerance")
    return lam


@dataclass(frozen=True)
class HopfPoint:
    """One row of a delay scan: measured amplitude and predicted leading root."""

    r: float
    amplitude: float
    root: complex

    @property
    def re_lambda(self) -> float:
        return self.root.real

    @property
    def im_lambda(self) -> float:
        return self.root.imag


def hopf_scan(game: GameSpec, r_values: Sequence[float], dt: float, horizon: float,
              probe) -> list[HopfPoint]:
    """Sweep the delay: integrate from the probe state and pair the measured
    asymptotic amplitude with the predicted leading root at each delay.

    The kernel shape is rescaled so its maximal lag equals each scanned r
    (a point mass stays a point mass).  Amplitude is max - min of the first
    component over the final quarter of the horizon.
    """
    payoffs = game.payoffs
    if not payoffs.is_snowdrift():
        raise RegimeError("delay scans are defined for snowdrift games (b > d, c > a)")
    e = interior_equilibrium_2x2(payoffs)
    (a, _b), (c, _d) = payoffs.entries
    beta = e * (c - a)
    if game.kernel.r > 0:
        unit_lags = np.asarray(game.kernel.lags, dtype=float) / game.kernel.r
    else:
        unit_lags = np.array([1.0])
    probe_vec = _as_simplex(probe if not np.isscalar(probe) else [probe, 1.0 - probe])
    rows = []
    for r in r_values:
        kern = DelayKernel(unit_lags * r, game.kernel.weights) if r > 0 else DelayKernel.dirac(0.0)
        spec = GameSpec(payoffs, kern, game.rate_scale)
        traj = integrate(DdeProblem(
            game=spec, initial=constant_history(probe_vec, kern.r, dt),
            dt=dt, horizon=horizon))
        window = traj.window((1.0 - AMPLITUDE_WINDOW) * horizon, horizon)[:, 0]
        amplitude = float(window.max() - window.min())
        rows.append(HopfPoint(r=float(r), amplitude=amplitude,
                              root=characteristic_root(beta, kern)))
    return rows


@dataclass(frozen=True)
class Prop1Result:
    """Average-delay sufficient condition for stability (sufficient only)."""

    sufficient_condition_holds: bool
    average_delay: float
    bound: float


def prop1_stability_check(game: GameSpec) -> Prop1Result:
    """Compare the kernel's average delay with 1 / (e (c - a)).

    Holding implies the equalizer is stable; failing implies nothing.
    """
    payoffs = game.payoffs
    if not payoffs.is_snowdrift():
        raise RegimeError("stability check is defined for snowdrift games (b > d, c > a)")
    e = interior_equilibrium_2x2(payoffs)
    (a, _b), (c, _d) = payoffs.entries
    bound = 1.0 / (e * (c - a))
    avg = average_delay(game.kernel)
    return Prop1Result(sufficient_condition_holds=avg < bound,
                       average_delay=avg, bound=bound)

"""Experiment dispatch: engines in, CSV artifacts plus a manifest out.

Every run writes a manifest echoing the fully resolved configuration
(defaults and derived quantities included) next to its data files, so an
artifact directory is self-describing.  All floats are written with 12
significant digits; rerunning a config with the same package version
reproduces every file byte for byte.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from . import __version__, fast
from .analysis import (deviation_tail_estimate, fixation_scaling, hopf_scan,
                       replicate_rng, running_average_exit_fraction, time_average)
from .config import ExperimentConfig
from .dde import DdeProblem, integrate
from .errors import ConfigurationError
from .game import interior_equilibrium_2x2
from .stochastic import init_from_function, run
from .trajectory import Trajectory


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _write_rows(path: Path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(outdir: Path, config: ExperimentConfig) -> Path:
    items = dict(config.resolved)
    items["tool_version"] = f"memrep {__version__}"
    path = outdir / "manifest.txt"
    with open(path, "w") as fh:
        for key in sorted(items):
            fh.write(f"{key} = {items[key]}\n")
    return path


def _history_callable(config: ExperimentConfig):
    initial = config.initial
    if callable(initial):
        return initial
    vec = np.asarray(initial, dtype=float)
    return lambda _t: vec


def _dde_initial(config: ExperimentConfig) -> np.ndarray:
    phi = _history_callable(config)
    r = config.kernel.r
    depth = round(r / config.dt)
    return np.array([phi(-r + k * config.dt) for k in range(depth + 1)])


def _simulate(state, game, rng, horizon) -> Trajectory:
    if state.d == 2:
        return fast.run_trajectory(state, game, rng, horizon)
    return run(state, game, rng, horizon)


def run_experiment(config: ExperimentConfig, *, jobs: int | None = None,
                   out_dir: str | None = None) -> list[Path]:
    """Run one configured experiment and return the paths written."""
    jobs = jobs or os.cpu_count()
    outdir = Path(out_dir or config.output_dir)
    runner = {
        "trajectory": _run_trajectory,
        "deviation": _run_deviation,
        "fixation": _run_fixation,
        "timeavg": _run_timeavg,
        "hopf_scan": _run_hopf,
    }[config.experiment]
    outdir.mkdir(parents=True, exist_ok=True)
    paths = runner(config, jobs, outdir)
    paths.append(_write_manifest(outdir, config))
    return paths


def _run_trajectory(config: ExperimentConfig, jobs: int, outdir: Path) -> list[Path]:
    game = config.game_spec()
    N = config.n_values[0]
    phi = _history_callable(config)
    state = init_from_function(phi, N, config.delay_steps(N))
    traj = _simulate(state, game, replicate_rng(config.seed, N, 0), config.horizon)
    det = integrate(DdeProblem(game=game, initial=_dde_initial(config),
                               dt=config.dt, horizon=config.horizon))
    s_path, d_path = outdir / "stochastic.csv", outdir / "deterministic.csv"
    traj.write_csv(s_path)
    det.write_csv(d_path)
    return [s_path, d_path]


def _run_deviation(config: ExperimentConfig, jobs: int, outdir: Path) -> list[Path]:
    game = config.game_spec()
    report = deviation_tail_estimate(
        game, config.initial, config.n_values, config.epsilon, config.horizon,
        config.replicates, config.seed, dt=config.dt, jobs=jobs)
    dev_path = outdir / "deviation.csv"
    _write_rows(dev_path, "N,replicate,D",
                [(N, rep, d) for N in report.n_values
                 for rep, d in enumerate(report.deviations[N])])
    tails_path = outdir / "tails.csv"
    _write_rows(tails_path, "N,epsilon,prob",
                [(N, report.epsilon, report.tail_probability[N]) for N in report.n_values])
    fit_path = outdir / "tails_fit.csv"
    _write_rows(fit_path, "slope,intercept,floored_count",
                [(report.fit_slope, report.fit_intercept,
                  sum(report.floored.values()))])
    return [dev_path, tails_path, fit_path]


def _run_fixation(config: ExperimentConfig, jobs: int, outdir: Path) -> list[Path]:
    game = config.game_spec()
    report = fixation_scaling(game, config.initial, config.n_values, config.replicates,
                              config.cap_steps, config.seed, jobs=jobs)
    rep_path = outdir / "fixation_replicates.csv"
    rows = []
    for N in report.n_values:
        for rep, outcome in enumerate(report.outcomes[N]):
            vertex = 0 if outcome.vertex is None else outcome.vertex + 1
            rows.append((rep, N, config.seed, outcome.time, vertex, int(outcome.timed_out)))
    _write_rows(rep_path, "replicate,N,seed,fixation_time,absorbed_vertex,timed_out", rows)
    sum_path = outdir / "fixation.csv"
    _write_rows(sum_path, "N,mean,median,stderr,timeouts",
                [(N, report.mean_time[N], report.median_time[N], report.stderr_time[N],
                  report.timeout_count[N]) for N in report.n_values])
    fit_path = outdir / "fixation_fit.csv"
    _write_rows(fit_path, "slope,intercept,r_squared,flagged_count",
                [(report.slope, report.intercept, report.r_squared, len(report.flagged))])
    return [rep_path, sum_path, fit_path]


def _run_timeavg(config: ExperimentConfig, jobs: int, outdir: Path) -> list[Path]:
    game = config.game_spec()
    det = integrate(DdeProblem(game=game, initial=_dde_initial(config),
                               dt=config.dt, horizon=config.horizon))
    avg = time_average(det, config.horizon)
    det_path = outdir / "timeavg_deterministic.csv"
    _write_rows(det_path, "T," + ",".join(f"avg_{i+1}" for i in range(game.d)),
                [(config.horizon, *avg)])
    e = interior_equilibrium_2x2(game.payoffs)
    if e is None:
        raise ConfigurationError("time averaging needs an interior equalizer")
    center = np.array([e, 1.0 - e])
    report = running_average_exit_fraction(
        game, config.initial, config.n_values, config.tau, center,
        config.epsilon, config.replicates, config.seed, jobs=jobs)
    sto_path = outdir / "timeavg_stochastic.csv"
    rows = []
    for N in report.n_values:
        for rep, vec in enumerate(report.averages[N]):
            outside = int(np.abs(vec - center).max() > config.epsilon)
            rows.append((N, rep, *vec, outside))
    _write_rows(sto_path,
                "N,replicate," + ",".join(f"avg_{i+1}" for i in range(game.d)) + ",outside",
                rows)
    sum_path = outdir / "timeavg_summary.csv"
    _write_rows(sum_path, "N,fraction_outside",
                [(N, report.outside_fraction[N]) for N in report.n_values])
    return [det_path, sto_path, sum_path]


def _run_hopf(config: ExperimentConfig, jobs: int, outdir: Path) -> list[Path]:
    game = config.game_spec()
    probe = config.initial if not callable(config.initial) else config.initial(0.0)
    points = hopf_scan(game, config.r_grid, config.dt, config.horizon, probe)
    path = outdir / "hopf.csv"
    _write_rows(path, "r,amplitude,re_lambda,im_lambda",
                [(p.r, p.amplitude, p.re_lambda, p.im_lambda) for p in points])
    return [path]

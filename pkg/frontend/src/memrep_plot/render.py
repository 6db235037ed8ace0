"""Render memrep CSV artifacts into figures.

Reads only the documented CSV schemas and never recomputes statistics; the
single source of truth for every number is the file that produced it.
Rendering is a pure function of the input files, so re-rendering a job
overwrites its output with identical content.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("trajectory_overlay", "fixation_bars", "hopf_amplitude")


class SchemaError(ValueError):
    """Input CSV does not match the documented schema."""


@dataclass(frozen=True)
class PlotJob:
    """One figure: input CSVs, figure kind, output path, axis labels."""

    inputs: tuple[Path, ...]
    kind: str
    output: Path
    xlabel: str = ""
    ylabel: str = ""
    reference: float | None = None  # horizontal guide (e.g. the equalizer)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {', '.join(FIGURE_KINDS)}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def read_csv(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Load a headered CSV, checking the required columns by name."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: no such file")
    with open(path) as fh:
        header = fh.readline().strip()
        has_rows = bool(fh.readline().strip())
    columns = header.split(",") if header else []
    missing = [name for name in required if name not in columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)} "
                          f"(found: {header or 'empty file'})")
    if not has_rows:
        raise SchemaError(f"{path}: no data rows")
    body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: body[:, k] for k, name in enumerate(columns)}


def _render_trajectory_overlay(job: PlotJob, ax) -> None:
    for path in job.inputs:
        data = read_csv(path, ("t", "x_1"))
        style = {"lw": 0.8} if "stochastic" in Path(path).stem else {"lw": 1.6, "ls": "--"}
        ax.plot(data["t"], data["x_1"], label=Path(path).stem, **style)
    if job.reference is not None:
        ax.axhline(job.reference, color="gray", lw=1.0, ls=":",
                   label=f"reference {job.reference:g}")
    ax.set_xlabel(job.xlabel or "t")
    ax.set_ylabel(job.ylabel or "frequency of strategy 1")
    ax.legend()


def _render_fixation_bars(job: PlotJob, ax) -> None:
    data = read_csv(job.inputs[0], ("N", "mean"))
    if np.any(data["mean"] <= 0):
        raise SchemaError(f"{job.inputs[0]}: nonpositive mean fixation time")
    ax.bar(data["N"], np.log(data["mean"]), width=0.6 * np.diff(data["N"]).min(initial=5.0))
    ax.set_xlabel(job.xlabel or "population size N")
    ax.set_ylabel(job.ylabel or "log mean fixation time")


def _render_hopf_amplitude(job: PlotJob, ax) -> None:
    data = read_csv(job.inputs[0], ("r", "amplitude", "re_lambda"))
    stable = data["re_lambda"] < 0
    ax.plot(data["r"], data["amplitude"], color="gray", lw=0.8)
    ax.plot(data["r"][stable], data["amplitude"][stable], "o", label="Re lambda < 0")
    ax.plot(data["r"][~stable], data["amplitude"][~stable], "s", label="Re lambda > 0")
    ax.set_xlabel(job.xlabel or "delay r")
    ax.set_ylabel(job.ylabel or "asymptotic amplitude")
    ax.legend()


_RENDERERS = {
    "trajectory_overlay": _render_trajectory_overlay,
    "fixation_bars": _render_fixation_bars,
    "hopf_amplitude": _render_hopf_amplitude,
}


def render(job: PlotJob) -> Path:
    """Draw the job's figure and write the image file; returns the path."""
    fig, ax = plt.subplots(figsize=(6.5, 6.5))
    try:
        _RENDERERS[job.kind](job, ax)
        fig.tight_layout()
        fig.savefig(job.output, dpi=120)
    finally:
        plt.close(fig)
    return Path(job.output)

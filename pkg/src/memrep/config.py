"""Experiment configuration: flat key = value text with dotted section names.

All numbers are decimal; the seed is mandatory (no wall-clock seeding) and
there are no environment-variable overrides, so a config file plus the
package version fully determines every output byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DegenerateGameError
from .game import DelayKernel, GameSpec, PayoffMatrix, interior_equilibrium_2x2

EXPERIMENTS = ("trajectory", "deviation", "fixation", "timeavg", "hopf_scan")

_KNOWN_KEYS = {
    "experiment", "seed", "replicates", "epsilon",
    "game.a", "game.b", "game.c", "game.d", "game.matrix",
    "kernel.type", "kernel.r", "kernel.weights", "kernel.spacing", "kernel.intervals",
    "population.N", "population.m",
    "dde.dt", "horizon.T", "cap.steps", "timeavg.tau", "hopf.r_grid",
    "initial.constant", "initial.file",
    "output.dir",
}

_DEFAULTS = {
    "dde.dt": "0.01",
    "cap.steps": "100000000",
    "kernel.intervals": "100",
    "initial.constant": "0.5",
    "output.dir": "out",
}


@dataclass(frozen=True)
class Finding:
    """One validation violation; an empty finding list means runnable."""

    key: str
    message: str

    def __str__(self) -> str:
        return f"{self.key}: {self.message}"


def parse_config_text(text: str) -> tuple[dict[str, str], list[Finding]]:
    """Parse `key = value` lines; full-line # comments and blanks are skipped."""
    raw: dict[str, str] = {}
    findings: list[Finding] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            findings.append(Finding(f"line {lineno}", f"expected 'key = value', got {stripped!r}"))
            continue
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key in raw:
            findings.append(Finding(key, "duplicate key"))
        raw[key] = value
    return raw, findings


@dataclass
class ExperimentConfig:
    """Typed view of a raw config, with defaults applied and m derived."""

    experiment: str
    seed: int
    raw: dict[str, str]
    payoffs: PayoffMatrix
    kernel: DelayKernel
    n_values: list[int]
    m_override: int | None
    dt: float
    horizon: float | None
    replicates: int | None
    epsilon: float | None
    cap_steps: int
    tau: float | None
    r_grid: list[float] | None
    initial: object  # constant simplex vector or tabulated-history callable
    output_dir: str
    resolved: dict[str, str] = field(default_factory=dict)

    def game_spec(self) -> GameSpec:
        return GameSpec(self.payoffs, self.kernel)

    def delay_steps(self, N: int) -> int:
        if self.m_override is not None:
            return self.m_override
        return round(self.kernel.r * N)


def _get(raw: dict[str, str], key: str) -> str | None:
    if key in raw:
        return raw[key]
    return _DEFAULTS.get(key)


def _parse_float(raw, key, findings, *, required=False) -> float | None:
    value = _get(raw, key)
    if value is None:
        if required:
            findings.append(Finding(key, "missing required value"))
        return None
    try:
        return float(value)
    except ValueError:
        findings.append(Finding(key, f"not a number: {value!r}"))
        return None


def _parse_int(raw, key, findings, *, required=False) -> int | None:
    value = _get(raw, key)
    if value is None:
        if required:
            findings.append(Finding(key, "missing required value"))
        return None
    try:
        return int(value)
    except ValueError:
        findings.append(Finding(key, f"not an integer: {value!r}"))
        return None


def _parse_float_list(raw, key, findings, *, required=False) -> list[float] | None:
    value = _get(raw, key)
    if value is None:
        if required:
            findings.append(Finding(key, "missing required value"))
        return None
    try:
        return [float(tok) for tok in value.split(",") if tok.strip()]
    except ValueError:
        findings.append(Finding(key, f"not a comma-separated number list: {value!r}"))
        return None


def _parse_payoffs(raw, findings) -> PayoffMatrix | None:
    if "game.matrix" in raw:
        try:
            rows = [[float(tok) for tok in row.split()] for row in raw["game.matrix"].split(";")]
            return PayoffMatrix(np.array(rows))
        except (ValueError, ConfigurationError) as exc:
            findings.append(Finding("game.matrix", str(exc)))
            return None
    entries = {}
    for key in ("game.a", "game.b", "game.c", "game.d"):
        entries[key] = _parse_float(raw, key, findings, required=True)
    if any(v is None for v in entries.values()):
        return None
    try:
        return PayoffMatrix.from_2x2(entries["game.a"], entries["game.b"],
                                     entries["game.c"], entries["game.d"])
    except ConfigurationError as exc:
        findings.append(Finding("game", str(exc)))
        return None


def _parse_kernel(raw, findings) -> DelayKernel | None:
    kind = _get(raw, "kernel.type")
    if kind is None:
        findings.append(Finding("kernel.type", "missing required value"))
        return None
    try:
        if kind == "dirac":
            r = _parse_float(raw, "kernel.r", findings, required=True)
            return DelayKernel.dirac(r) if r is not None else None
        if kind == "uniform":
            r = _parse_float(raw, "kernel.r", findings, required=True)
            intervals = _parse_int(raw, "kernel.intervals", findings)
            return DelayKernel.uniform(r, intervals) if r is not None else None
        if kind == "discrete":
            weights = _parse_float_list(raw, "kernel.weights", findings, required=True)
            spacing = _parse_float(raw, "kernel.spacing", findings, required=True)
            if weights is None or spacing is None:
                return None
            return DelayKernel.discrete(weights, spacing)
    except ConfigurationError as exc:
        findings.append(Finding("kernel", str(exc)))
        return None
    findings.append(Finding("kernel.type", f"unknown kernel type {kind!r}"))
    return None


def _parse_initial(raw, findings, d: int):
    if "initial.file" in raw:
        path = Path(raw["initial.file"])
        if not path.exists():
            findings.append(Finding("initial.file", f"no such file: {path}"))
            return None
        return _tabulated_history(path, findings)
    value = _get(raw, "initial.constant")
    try:
        parts = [float(tok) for tok in value.split(",") if tok.strip()]
    except ValueError:
        findings.append(Finding("initial.constant", f"not a number list: {value!r}"))
        return None
    if len(parts) == 1 and d == 2:
        parts = [parts[0], 1.0 - parts[0]]
    vec = np.asarray(parts, dtype=float)
    if len(parts) != d or np.any(vec < 0) or abs(vec.sum() - 1.0) > 1e-9:
        findings.append(Finding("initial.constant",
                                f"{value!r} is not a {d}-strategy frequency vector"))
        return None
    return vec


def _tabulated_history(path: Path, findings):
    """History table: CSV with header t,x_1,... evaluated at exact grid times only."""
    try:
        body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        findings.append(Finding("initial.file", f"unparseable table: {exc}"))
        return None
    times, values = body[:, 0], body[:, 1:]

    def phi(t: float) -> np.ndarray:
        idx = np.argmin(np.abs(times - t))
        if abs(times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise ConfigurationError(
                f"initial table has no entry at t = {t} (lags must be tabulated exactly)")
        return values[idx]

    return phi


def validate_raw(raw: dict[str, str]) -> tuple[ExperimentConfig | None, list[Finding]]:
    """Build a typed config, collecting every violation instead of stopping."""
    findings: list[Finding] = []
    for key in raw:
        if key not in _KNOWN_KEYS:
            findings.append(Finding(key, "unknown key"))
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        findings.append(Finding("experiment", f"must be one of {', '.join(EXPERIMENTS)}"))
    seed = _parse_int(raw, "seed", findings, required=True)
    payoffs = _parse_payoffs(raw, findings)
    kernel = _parse_kernel(raw, findings)
    dt = _parse_float(raw, "dde.dt", findings)
    cap_steps = _parse_int(raw, "cap.steps", findings)
    replicates = _parse_int(raw, "replicates", findings)
    epsilon = _parse_float(raw, "epsilon", findings)
    horizon = _parse_float(raw, "horizon.T", findings)
    tau = _parse_float(raw, "timeavg.tau", findings)
    m_override = _parse_int(raw, "population.m", findings)
    r_grid = _parse_float_list(raw, "hopf.r_grid", findings)
    n_floats = _parse_float_list(raw, "population.N", findings)
    n_values: list[int] = []
    if n_floats:
        for v in n_floats:
            if v != int(v) or v < 2:
                findings.append(Finding("population.N", f"{v} is not a population size >= 2"))
            else:
                n_values.append(int(v))
    initial = _parse_initial(raw, findings, payoffs.d if payoffs else 2)

    needs_n = experiment in ("trajectory", "deviation", "fixation", "timeavg")
    if needs_n and not n_values:
        findings.append(Finding("population.N", "missing required value"))
    if experiment == "trajectory" and len(n_values) > 1:
        findings.append(Finding("population.N", "trajectory runs take a single N"))
    if experiment in ("deviation", "fixation", "timeavg") and replicates is None:
        findings.append(Finding("replicates", "missing required value"))
    if experiment in ("trajectory", "deviation", "timeavg", "hopf_scan") and horizon is None:
        findings.append(Finding("horizon.T", "missing required value"))
    if experiment == "timeavg":
        if tau is None:
            findings.append(Finding("timeavg.tau", "missing required value"))
        if epsilon is None:
            findings.append(Finding("epsilon", "missing required value"))
    if experiment == "deviation" and epsilon is None:
        findings.append(Finding("epsilon", "missing required value"))
    if experiment == "hopf_scan" and not r_grid:
        findings.append(Finding("hopf.r_grid", "missing required value"))

    if kernel is not None and m_override is None:
        for N in n_values:
            m = kernel.r * N
            if abs(m - round(m)) > 1e-9 * max(1.0, m):
                findings.append(Finding(
                    "population.N", f"delay not grid-representable: r*N = {m} for N = {N}"))
            elif kernel.r > 0 and round(m) < 1:
                findings.append(Finding("population.N", f"derived m < 1 for N = {N}"))
    if kernel is not None and dt is not None and experiment != "fixation":
        ratio = kernel.r / dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            findings.append(Finding("dde.dt", f"kernel lag r = {kernel.r} not a multiple of dt"))
    if experiment == "hopf_scan" and r_grid and dt:
        for r in r_grid:
            if abs(r / dt - round(r / dt)) > 1e-9 * max(1.0, r / dt):
                findings.append(Finding("hopf.r_grid", f"r = {r} not aligned with dt = {dt}"))
    if experiment == "hopf_scan" and payoffs is not None and not payoffs.is_snowdrift():
        findings.append(Finding("game", "not in snowdrift regime (needs b > d and c > a)"))
    if experiment == "fixation" and payoffs is not None and payoffs.d == 2:
        try:
            e = interior_equilibrium_2x2(payoffs)
        except DegenerateGameError:
            e = None
        if e is not None:
            for N in n_values:
                if abs(e * N - round(e * N)) < 1e-9 * N:
                    findings.append(Finding(
                        "population.N",
                        f"frozen-state warning: equalizer {e:.6g} lies on the count grid for N = {N}"))

    if findings or payoffs is None or kernel is None or seed is None or initial is None:
        return None, findings
    config = ExperimentConfig(
        experiment=experiment, seed=seed, raw=dict(raw), payoffs=payoffs, kernel=kernel,
        n_values=n_values, m_override=m_override, dt=dt, horizon=horizon,
        replicates=replicates, epsilon=epsilon, cap_steps=cap_steps, tau=tau,
        r_grid=r_grid, initial=initial, output_dir=_get(raw, "output.dir"))
    config.resolved = _resolved_items(config)
    return config, findings


def _resolved_items(config: ExperimentConfig) -> dict[str, str]:
    """Full resolved configuration (defaults and derived values included)."""
    out = dict(config.raw)
    for key, default in _DEFAULTS.items():
        out.setdefault(key, default)
    if config.n_values:
        out["derived.m"] = ",".join(str(config.delay_steps(N)) for N in config.n_values)
        out["derived.delta"] = ",".join(f"{1.0 / N:.12g}" for N in config.n_values)
    return out


def load_config(path) -> tuple[ExperimentConfig | None, list[Finding]]:
    text = Path(path).read_text()
    raw, findings = parse_config_text(text)
    config, more = validate_raw(raw)
    return config, findings + more


# ---------------------------------------------------------------------------
# shipped presets
#
# The sources did not state the initial data for the trajectory panels or the
# delay used in the fixation sweep; the presets below are the documented
# reconstruction: constant history at (0.5, 0.5) everywhere, and r = 5 for
# the fixation sweep (the subcritical r = 4 pushes fixation times past any
# desktop budget already at N around 50).

_HD = """\
game.a = 0.5
game.b = 0.5
game.c = 1.5
game.d = 0
"""

PRESETS: dict[str, str] = {
    "fig1a": _HD + """\
experiment = trajectory
seed = 1001
kernel.type = dirac
kernel.r = 4
population.N = 1000
dde.dt = 0.01
horizon.T = 200
initial.constant = 0.5
""",
    "fig1b": _HD + """\
experiment = trajectory
seed = 1002
kernel.type = dirac
kernel.r = 4
population.N = 10000
dde.dt = 0.01
horizon.T = 200
initial.constant = 0.5
""",
    "fig1c": _HD + """\
experiment = trajectory
seed = 1003
kernel.type = dirac
kernel.r = 5
population.N = 1000
dde.dt = 0.01
horizon.T = 200
initial.constant = 0.5
""",
    "fig1d": _HD + """\
experiment = trajectory
seed = 1004
kernel.type = dirac
kernel.r = 5
population.N = 10000
dde.dt = 0.01
horizon.T = 200
initial.constant = 0.5
""",
    "fig2": _HD + """\
experiment = fixation
seed = 2001
kernel.type = dirac
kernel.r = 5
population.N = 10,25,40,55,70,85,100
replicates = 500
cap.steps = 100000000
initial.constant = 0.5
""",
    "hopf": _HD + """\
experiment = hopf_scan
seed = 3001
kernel.type = dirac
kernel.r = 4
hopf.r_grid = 0,0.5,1,1.5,2,2.5,3,3.5,4,4.5,5,5.5,6
dde.dt = 0.01
horizon.T = 2400
initial.constant = 0.5
""",
    "timeavg": _HD + """\
experiment = timeavg
seed = 4001
kernel.type = dirac
kernel.r = 5
population.N = 500,1000,2000
replicates = 50
epsilon = 0.1
dde.dt = 0.01
horizon.T = 2000
timeavg.tau = 200
initial.constant = 0.5
""",
    "deviation": _HD + """\
experiment = deviation
seed = 5001
kernel.type = dirac
kernel.r = 4
population.N = 500,1000,2000
replicates = 100
epsilon = 0.1
dde.dt = 0.01
horizon.T = 50
initial.constant = 0.5
""",
}

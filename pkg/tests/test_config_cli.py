from pathlib import Path

import numpy as np
import pytest

from memrep.cli import main
from memrep.config import PRESETS, load_config, parse_config_text, validate_raw
from memrep.experiments import run_experiment

TINY_TRAJECTORY = """\
# smallest sensible trajectory run
experiment = trajectory
seed = 7
game.a = 0.5
game.b = 0.5
game.c = 1.5
game.d = 0
kernel.type = dirac
kernel.r = 0.5
population.N = 50
dde.dt = 0.01
horizon.T = 2
initial.constant = 0.5
"""


def write(tmp_path: Path, text: str, name: str = "exp.cfg") -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# parsing and validation


def test_parse_skips_comments_and_blanks():
    raw, findings = parse_config_text("# c\n\nseed = 3\n")
    assert raw == {"seed": "3"} and not findings


def test_parse_flags_malformed_lines_and_duplicates():
    raw, findings = parse_config_text("seed 3\nseed = 1\nseed = 2\n")
    assert any("key = value" in f.message for f in findings)
    assert any(f.message == "duplicate key" for f in findings)


def test_missing_seed_is_a_violation():
    raw, _ = parse_config_text(TINY_TRAJECTORY.replace("seed = 7\n", ""))
    config, findings = validate_raw(raw)
    assert config is None
    assert any(f.key == "seed" for f in findings)


def test_unknown_key_is_a_violation():
    raw, _ = parse_config_text(TINY_TRAJECTORY + "mystery.knob = 12\n")
    config, findings = validate_raw(raw)
    assert any(f.key == "mystery.knob" for f in findings)


def test_delay_must_be_grid_representable():
    raw, _ = parse_config_text(TINY_TRAJECTORY.replace("kernel.r = 0.5", "kernel.r = 0.15")
                               .replace("population.N = 50", "population.N = 10"))
    config, findings = validate_raw(raw)
    assert any("not grid-representable" in f.message or "not a multiple of dt" in f.message
               for f in findings)


def test_hopf_scan_requires_snowdrift_regime():
    text = TINY_TRAJECTORY.replace("experiment = trajectory", "experiment = hopf_scan")
    text = text.replace("game.c = 1.5", "game.c = 0.2") + "hopf.r_grid = 1,2\n"
    raw, _ = parse_config_text(text)
    _config, findings = validate_raw(raw)
    assert any("snowdrift" in f.message for f in findings)


def test_fixation_frozen_state_warning_for_divisible_population():
    text = TINY_TRAJECTORY.replace("experiment = trajectory", "experiment = fixation")
    text = text.replace("population.N = 50", "population.N = 9") + "replicates = 5\n"
    raw, _ = parse_config_text(text)
    _config, findings = validate_raw(raw)
    assert any("frozen-state" in f.message for f in findings)


def test_all_presets_validate_cleanly():
    for name, text in PRESETS.items():
        raw, parse_findings = parse_config_text(text)
        config, findings = validate_raw(raw)
        assert not parse_findings and not findings, (name, findings)
        assert config is not None


# ---------------------------------------------------------------------------
# run_experiment on a tiny config


def test_tiny_trajectory_run_writes_expected_files(tmp_path):
    config, findings = load_config(write(tmp_path, TINY_TRAJECTORY))
    assert not findings
    paths = run_experiment(config, jobs=1, out_dir=str(tmp_path / "out"))
    names = sorted(p.name for p in paths)
    assert names == ["deterministic.csv", "manifest.txt", "stochastic.csv"]
    stoch = (tmp_path / "out" / "stochastic.csv").read_text().splitlines()
    m = round(0.5 * 50)
    assert stoch[0] == "t,x_1,x_2"
    assert len(stoch) == 1 + (m + 1 + 100)  # header + history + T*N steps
    det = (tmp_path / "out" / "deterministic.csv").read_text().splitlines()
    assert len(det) == 1 + (50 + 200 + 1)
    manifest = (tmp_path / "out" / "manifest.txt").read_text()
    assert "derived.m = 25" in manifest
    assert "tool_version = memrep" in manifest


def test_tiny_deviation_run_row_counts(tmp_path):
    text = TINY_TRAJECTORY.replace("experiment = trajectory", "experiment = deviation")
    text += "replicates = 4\nepsilon = 0.1\n"
    text = text.replace("population.N = 50", "population.N = 50,100")
    config, findings = load_config(write(tmp_path, text))
    assert not findings, findings
    run_experiment(config, jobs=1, out_dir=str(tmp_path / "out"))
    dev = (tmp_path / "out" / "deviation.csv").read_text().splitlines()
    assert dev[0] == "N,replicate,D" and len(dev) == 1 + 2 * 4
    tails = (tmp_path / "out" / "tails.csv").read_text().splitlines()
    assert tails[0] == "N,epsilon,prob" and len(tails) == 1 + 2


def test_tiny_timeavg_run_row_counts(tmp_path):
    text = TINY_TRAJECTORY.replace("experiment = trajectory", "experiment = timeavg")
    text += "replicates = 3\nepsilon = 0.2\ntimeavg.tau = 2\n"
    text = text.replace("population.N = 50", "population.N = 40,80")
    text = text.replace("horizon.T = 2", "horizon.T = 5")
    config, findings = load_config(write(tmp_path, text))
    assert not findings, findings
    run_experiment(config, jobs=1, out_dir=str(tmp_path / "out"))
    sto = (tmp_path / "out" / "timeavg_stochastic.csv").read_text().splitlines()
    assert sto[0] == "N,replicate,avg_1,avg_2,outside" and len(sto) == 1 + 2 * 3
    summary = (tmp_path / "out" / "timeavg_summary.csv").read_text().splitlines()
    assert summary == ["N,fraction_outside", "40,0", "80,0"]
    det = (tmp_path / "out" / "timeavg_deterministic.csv").read_text().splitlines()
    assert det[0] == "T,avg_1,avg_2" and len(det) == 2


def test_reruns_are_byte_identical(tmp_path):
    config, _ = load_config(write(tmp_path, TINY_TRAJECTORY))
    run_experiment(config, jobs=1, out_dir=str(tmp_path / "a"))
    config2, _ = load_config(write(tmp_path, TINY_TRAJECTORY))
    run_experiment(config2, jobs=2, out_dir=str(tmp_path / "b"))
    for name in ("stochastic.csv", "deterministic.csv", "manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# ---------------------------------------------------------------------------
# CLI surface


def test_cli_validate_reports_violations(tmp_path, capsys):
    path = write(tmp_path, TINY_TRAJECTORY.replace("seed = 7\n", ""))
    assert main(["validate", str(path)]) == 1
    assert "seed" in capsys.readouterr().out


def test_cli_validate_accepts_good_config(tmp_path):
    path = write(tmp_path, TINY_TRAJECTORY)
    assert main(["validate", str(path)]) == 0


def test_cli_run_invalid_config_writes_nothing(tmp_path, capsys):
    path = write(tmp_path, TINY_TRAJECTORY.replace("seed = 7\n", ""))
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out)]) == 1
    assert not out.exists()
    assert "kind=validation" in capsys.readouterr().err


def test_cli_run_payoff_scale_failure_is_runtime_exit(tmp_path, capsys):
    text = TINY_TRAJECTORY.replace("game.a = 0.5", "game.a = 2.5")
    text = text.replace("game.b = 0.5", "game.b = 2.5").replace("game.c = 1.5", "game.c = 7.5")
    path = write(tmp_path, text)
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 2
    assert "kind=runtime" in capsys.readouterr().err


def test_cli_run_tiny_config(tmp_path, capsys):
    path = write(tmp_path, TINY_TRAJECTORY)
    assert main(["run", str(path), "--out", str(tmp_path / "out"), "--jobs", "1"]) == 0
    assert (tmp_path / "out" / "manifest.txt").exists()


def test_cli_unknown_preset_rejected():
    with pytest.raises(SystemExit):
        main(["preset", "fig9", "--out", "/tmp/nowhere"])


def test_initial_table_file(tmp_path):
    # tabulated history must cover both engine grids exactly: the 1/N grid
    # for the chain and the dt grid for the integrator
    N, m = 50, 25
    times = sorted({k / N for k in range(-m, 1)} | {j * 0.01 for j in range(-50, 1)})
    rows = ["t,x_1,x_2"]
    for t in times:
        rows.append(f"{t},{0.5 + t / 10},{0.5 - t / 10}")
    table = write(tmp_path, "\n".join(rows) + "\n", name="phi.csv")
    text = TINY_TRAJECTORY.replace("initial.constant = 0.5",
                                   f"initial.file = {table}")
    config, findings = load_config(write(tmp_path, text))
    assert not findings, findings
    paths = run_experiment(config, jobs=1, out_dir=str(tmp_path / "out"))
    assert any(p.name == "stochastic.csv" for p in paths)

import shutil
import subprocess

import pytest

MEMREP = shutil.which("memrep")


@pytest.fixture(scope="session")
def preset_outputs(tmp_path_factory):
    """Real artifact directories produced by the primary CLI, one per preset.

    The fixation preset dominates the runtime (a few minutes); everything
    downstream only reads the CSV files.
    """
    if MEMREP is None:
        pytest.skip("memrep CLI not installed; preset-based rendering skipped")
    root = tmp_path_factory.mktemp("presets")
    dirs = {}
    for name in ("fig1a", "fig1b", "fig1c", "fig1d", "fig2", "hopf"):
        out = root / name
        proc = subprocess.run([MEMREP, "preset", name, "--out", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        dirs[name] = out
    return dirs

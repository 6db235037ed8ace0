import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memrep import DelayKernel, GameSpec, PayoffMatrix, init_constant_history
from memrep import fast


@pytest.fixture
def hd_payoffs() -> PayoffMatrix:
    """Snowdrift parameters with equalizer 1/3 and critical delay 3*pi/2."""
    return PayoffMatrix.from_2x2(0.5, 0.5, 1.5, 0.0)


@pytest.fixture
def hd_game(hd_payoffs) -> GameSpec:
    return GameSpec(hd_payoffs, DelayKernel.dirac(4.0))


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    """Compile the numba kernels once so timed tests measure simulation only."""
    game = GameSpec(PayoffMatrix.from_2x2(0.5, 0.5, 1.5, 0.0), DelayKernel.dirac(0.5))
    state = init_constant_history([0.5, 0.5], 10, 5)
    rng = np.random.Generator(np.random.PCG64(0))
    fast.run_trajectory(state, game, rng, 1.0)
    fast.fixation(init_constant_history([0.5, 0.5], 10, 5), game, rng, 100)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memrep import (ConfigurationError, DegenerateGameError, DelayKernel,
                    GameSpec, PayoffMatrix, RegimeError, average_delay,
                    critical_delay_2x2, delayed_average, fitness,
                    interior_equilibrium_2x2)

HD = PayoffMatrix.from_2x2(0.5, 0.5, 1.5, 0.0)


def simplex_vectors(d=2):
    return st.lists(st.floats(0.01, 1.0), min_size=d, max_size=d).map(
        lambda w: np.array(w) / np.sum(w))


# ---------------------------------------------------------------------------
# kernels


def test_dirac_kernel_is_point_mass():
    k = DelayKernel.dirac(4.0)
    assert k.r == 4.0
    assert np.array_equal(k.weights, [1.0])


def test_discrete_kernel_weights_must_sum_to_one():
    DelayKernel.discrete([0.25, 0.25, 0.25, 0.25], spacing=1.0)
    with pytest.raises(ConfigurationError):
        DelayKernel.discrete([0.3, 0.3], spacing=1.0)
    with pytest.raises(ConfigurationError):
        DelayKernel.discrete([-0.5, 1.5], spacing=1.0)


def test_sampled_uniform_kernel_has_unit_mass_before_renormalization():
    # trapezoid quadrature of a constant density is exact
    r, intervals = 2.0, 50
    h = r / intervals
    coeff = np.full(intervals + 1, h)
    coeff[0] = coeff[-1] = h / 2
    raw_mass = (coeff * (1.0 / r)).sum()
    assert abs(raw_mass - 1.0) <= 1e-9
    k = DelayKernel.uniform(r, intervals)
    assert abs(k.weights.sum() - 1.0) <= 1e-12


def test_step_offsets_reject_misaligned_lags():
    k = DelayKernel.dirac(4.0)
    assert k.step_offsets(0.01)[0] == 400
    with pytest.raises(ConfigurationError):
        k.step_offsets(0.03)


# ---------------------------------------------------------------------------
# delayed_average


def test_delayed_average_of_constant_history_is_the_constant():
    p = np.array([0.2, 0.8])
    history = np.tile(p, (11, 1))
    for kernel in (DelayKernel.dirac(0.5), DelayKernel.discrete([0.5, 0.5], 0.1),
                   DelayKernel.uniform(1.0, 10)):
        out = delayed_average(history, 0.1, kernel)
        assert np.allclose(out, p, atol=1e-15)


def test_delayed_average_dirac_reads_the_lagged_point():
    history = np.array([[1 / 3, 2 / 3]] + [[0.9, 0.1]] * 4)  # lag 4 steps = (1/3, 2/3)
    out = delayed_average(history, 1.0, DelayKernel.dirac(4.0))
    assert np.array_equal(out, [1 / 3, 2 / 3])


def test_delayed_average_two_point_kernel():
    history = np.array([[0.0, 1.0], [1.0, 0.0]])  # x(t-dt) = (0,1), x(t) = (1,0)
    out = delayed_average(history, 0.1, DelayKernel.discrete([0.5, 0.5], 0.1))
    assert np.array_equal(out, [0.5, 0.5])


def test_delayed_average_uniform_kernel_matches_trapezoid_oracle():
    # history x(s) = (s + 1, -s) on [-1, 0], grid step 0.01; the exact uniform
    # average of the first component is the integral of (1 - lag) = 1/2
    step = 0.01
    s = np.arange(-100, 1) * step
    history = np.column_stack([s + 1.0, -s])
    kernel = DelayKernel.uniform(1.0, 100)
    out = delayed_average(history, step, kernel)
    lags = np.arange(101) * step
    coeff = np.full(101, step)
    coeff[0] = coeff[-1] = step / 2
    oracle = (coeff * (1.0 - lags)).sum() / coeff.sum()
    assert abs(out[0] - oracle) <= 1e-12
    assert abs(out[0] - 0.5) <= 1e-9  # trapezoid is exact on linear data


def test_delayed_average_rejects_short_history():
    with pytest.raises(ConfigurationError):
        delayed_average(np.tile([0.5, 0.5], (3, 1)), 1.0, DelayKernel.dirac(4.0))


@settings(max_examples=50, deadline=None)
@given(simplex_vectors(), simplex_vectors(), simplex_vectors(), st.floats(0.0, 1.0))
def test_delayed_average_stays_in_simplex(p0, p1, p2, w):
    history = np.array([p2, p1, p0])
    kernel = DelayKernel.discrete([w / 2, 0.5, (1 - w) / 2], spacing=1.0)
    out = delayed_average(history, 1.0, kernel)
    assert out.min() >= -1e-12
    assert abs(out.sum() - 1.0) <= 1e-12


# ---------------------------------------------------------------------------
# fitness


def test_fitness_equalizes_at_one_third():
    f = fitness(np.array([1 / 3, 2 / 3]), HD)
    assert np.allclose(f, [0.5, 0.5], atol=1e-15)


def test_fitness_identity_and_column_readoff():
    eye = PayoffMatrix(np.eye(2))
    assert np.array_equal(fitness(np.array([1.0, 0.0]), eye), [1.0, 0.0])
    assert np.array_equal(fitness(np.array([1.0, 0.0]), HD), [0.5, 1.5])


def test_fitness_rejects_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        fitness(np.array([0.2, 0.3, 0.5]), HD)


@settings(max_examples=50, deadline=None)
@given(simplex_vectors(), simplex_vectors(), st.floats(0.0, 1.0))
def test_fitness_is_linear(x, y, alpha):
    mix = alpha * x + (1 - alpha) * y
    direct = fitness(mix, HD)
    combined = alpha * fitness(x, HD) + (1 - alpha) * fitness(y, HD)
    assert np.allclose(direct, combined, atol=1e-12)


# ---------------------------------------------------------------------------
# equilibrium and critical delay


def test_interior_equilibrium_snowdrift_is_exactly_one_third():
    assert interior_equilibrium_2x2(HD) == 1 / 3


def test_interior_equilibrium_symmetric_anticoordination():
    assert interior_equilibrium_2x2(PayoffMatrix.from_2x2(0, 1, 1, 0)) == 0.5


def test_interior_equilibrium_coordination_root():
    # hand-solved root of 3e - 1 = 0; stability is a separate question
    assert interior_equilibrium_2x2(PayoffMatrix.from_2x2(2, 0, 0, 1)) == pytest.approx(1 / 3)


def test_interior_equilibrium_none_when_root_outside():
    assert interior_equilibrium_2x2(PayoffMatrix.from_2x2(2, 1, 0, 0)) is None


def test_interior_equilibrium_degenerate_game():
    with pytest.raises(DegenerateGameError):
        interior_equilibrium_2x2(PayoffMatrix.from_2x2(1, 1, 1, 1))


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_equalizer_makes_payoffs_equal(a, b, c, d):
    if a - b - c + d == 0:
        return
    payoffs = PayoffMatrix.from_2x2(a, b, c, d)
    e = interior_equilibrium_2x2(payoffs)
    if e is None:
        return
    f = fitness(np.array([e, 1 - e]), payoffs)
    assert abs(f[0] - f[1]) <= 1e-12


def test_critical_delay_snowdrift_benchmark():
    rstar = critical_delay_2x2(HD)
    assert rstar == pytest.approx(3 * np.pi / 2, abs=1e-12)
    assert 4.70 <= rstar <= 4.72


def test_critical_delay_unit_case():
    # e = 1/2 and c - a = 2 gives R = 1
    payoffs = PayoffMatrix.from_2x2(0, 2, 2, 0)
    assert interior_equilibrium_2x2(payoffs) == 0.5
    assert critical_delay_2x2(payoffs) == pytest.approx(np.pi / 2)


def test_critical_delay_hand_solved_case():
    payoffs = PayoffMatrix.from_2x2(0, 1, 2, 0)
    assert interior_equilibrium_2x2(payoffs) == pytest.approx(1 / 3)
    assert critical_delay_2x2(payoffs) == pytest.approx(3 * np.pi / 4)


def test_critical_delay_requires_snowdrift():
    with pytest.raises(RegimeError):
        critical_delay_2x2(PayoffMatrix.from_2x2(2, 0, 0, 1))


def test_sufficient_bound_sits_below_the_sharp_threshold():
    # average delay < R implies r < R < R * pi/2: the sufficient condition
    # can never contradict the sharp one
    e = interior_equilibrium_2x2(HD)
    R = 1.0 / (e * (1.5 - 0.5))
    assert R < critical_delay_2x2(HD)


# ---------------------------------------------------------------------------
# average delay


def test_average_delay_examples():
    assert average_delay(DelayKernel.dirac(4.0)) == 4.0
    assert average_delay(DelayKernel.uniform(2.0, 200)) == pytest.approx(1.0, abs=1e-12)
    assert average_delay(DelayKernel.discrete([0.25] * 4, spacing=1.0)) == pytest.approx(1.5)


# ---------------------------------------------------------------------------
# game spec


def test_max_pairwise_gain_hawk_dove():
    assert HD.max_pairwise_gain() == 1.0


def test_game_spec_rejects_bad_rate_scale():
    with pytest.raises(ConfigurationError):
        GameSpec(HD, DelayKernel.dirac(1.0), rate_scale=0.0)


def test_payoff_matrix_validation():
    with pytest.raises(ConfigurationError):
        PayoffMatrix(np.array([[np.inf, 0], [0, 1]]))
    with pytest.raises(ConfigurationError):
        PayoffMatrix(np.array([[1.0]]))

"""Finite-population imitation dynamics with memory.

A seeded simulator for the delayed strategy-revision process, an explicit
Euler integrator for its delay-differential mean-field limit, and analysis
tools that quantify how closely and for how long the two agree.
"""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DegenerateGameError, InstabilityError,
                     InvalidHistoryError, MemrepError, PayoffScaleError,
                     RegimeError, RootFindingError)
from .game import (DelayKernel, GameSpec, PayoffMatrix, average_delay,
                   critical_delay_2x2, delayed_average, fitness,
                   interior_equilibrium_2x2)
from .trajectory import Trajectory, interpolate
from .stochastic import (FixationOutcome, PopulationState, StepOutcome,
                         fixation_time, imitation_probabilities,
                         init_constant_history, init_from_function,
                         round_to_grid, run, step)
from .dde import DdeProblem, constant_history, integrate, replicator_field, step_doubling_error
from .analysis import (DeviationReport, FixationReport, HopfPoint, Prop1Result,
                       RunningAverageReport, characteristic_root, deviation,
                       deviation_tail_estimate, exact_grid_average,
                       fixation_scaling, hopf_scan, prop1_stability_check,
                       replicate_rng, running_average_exit_fraction, time_average)

__all__ = [name for name in dir() if not name.startswith("_")]

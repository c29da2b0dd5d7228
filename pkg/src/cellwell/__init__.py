"""Pseudo-two-dimensional Li-ion cell simulator with well-posedness diagnostics."""

from .charge import (BCMode, ChargeProblem, Gauge, PinElectrolyteAt, PinSolidAt,
                     PotentialSolution, assemble_charge_problem, compatibility_defect,
                     gauge_shift, mean_zero_solution, solve_charge, solve_charge_linearized,
                     solve_charge_newton)
from .errors import (AssemblyError, CellwellError, ConfigurationError, DomainError,
                     IllPosedError, InvariantViolation, KineticOverflowError, NonConvergenceError,
                     SimulationAbort, StepFailureError)
from .kinetics import KineticsMode, reaction_current, reaction_current_deta
from .mesh import build_mesh
from .params import (CellParameters, InitialConditions, OcvCurve, Protocol, Region, Segment,
                     load_config, validate)
from .simulate import CellState, Simulation, SimulationOptions, TimeSeriesRecord, run
from .thermal import heat_sources, temperature_step

__version__ = "0.1.0"

"""Hybrid fluid/kinetic solver for rarefied gas flows.

The package couples a compressible Euler solver with a discrete-velocity
relaxation model on a shared Cartesian grid.  Each cell is labeled fluid or
kinetic; labels evolve from a local breakdown indicator, and both regimes
advance together under one high-order implicit/explicit time integrator.
"""

from .config import MODES, SCENARIOS, ScenarioConfig, load_config, make_config, parse_config
from .coupling import DecompositionStats, DomainDecomposition, lift_to_kinetic, project_to_macro
from .driver import RunResult, run_convergence_study, run_simulation
from .errors import (
    ClosureFailureError,
    ConfigError,
    ContractViolationError,
    KinhyError,
    NonPhysicalStateError,
    RealizabilityViolationError,
    VacuumCellError,
)
from .mesh import FLUID, KINETIC, OBSTACLE, SpatialGrid, VelocityGrid, build_grids
from .params import CouplingThresholds, PhysicsParams
from .scenarios import init_scenario, richardson_order
from .stepper import ButcherPair, ars233, cfl_timestep, check_order_conditions

__version__ = "0.1.0"

__all__ = [
    "MODES",
    "SCENARIOS",
    "ScenarioConfig",
    "load_config",
    "make_config",
    "parse_config",
    "DecompositionStats",
    "DomainDecomposition",
    "lift_to_kinetic",
    "project_to_macro",
    "RunResult",
    "run_convergence_study",
    "run_simulation",
    "KinhyError",
    "ConfigError",
    "NonPhysicalStateError",
    "VacuumCellError",
    "ClosureFailureError",
    "RealizabilityViolationError",
    "ContractViolationError",
    "FLUID",
    "KINETIC",
    "OBSTACLE",
    "SpatialGrid",
    "VelocityGrid",
    "build_grids",
    "CouplingThresholds",
    "PhysicsParams",
    "init_scenario",
    "richardson_order",
    "ButcherPair",
    "ars233",
    "cfl_timestep",
    "check_order_conditions",
    "__version__",
]

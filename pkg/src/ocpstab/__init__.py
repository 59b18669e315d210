"""Indirect-method optimal control on uniform grids, with stability and
oscillation analysis of the mid-point and implicit Euler discretisations."""

from .analytic import AnalyticSolution, LinearOCPParams, derive_constants, eval_analytic, gamma
from .errors import (BlowUpError, ConfigurationError, ContractViolation, ConvergenceError, DomainError,
                     NoThresholdError, OCPError, SingularConfigurationError, SingularPropagationError,
                     SolverError)
from .grid import (Scheme, ScalarTrajectory, TimeGrid, VectorTrajectory, grid_from_dt, interpolated_node,
                   make_grid)
from .hbvp import (ControlProblem, NewtonSettings, control_hamiltonian, linear_control_problem,
                   continuation_path, forward_guess, newton_solve, nodal_hamiltonian, residual,
                   residual_jacobian, straight_line_guess)
from .linear import (IECoefficients, MPCoefficients, PropagationForm, assemble_ie, assemble_mp, propagate,
                     propagation_ie, propagation_mp, solve_bvp)
from .pendulum import PendulumParams, pendulum_problem, spring_gradient, spring_potential
from .stability import (Classification, PhaseDiagram, StabilityReport, alpha_threshold, classify,
                        eigenvalues_ie, eigenvalues_mp, oscillation_index, phase_sweep, spectral_radius_ie,
                        spectral_radius_mp, stability_report)

__version__ = "0.1.0"

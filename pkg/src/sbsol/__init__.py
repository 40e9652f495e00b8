"""Least-energy states of cross-coupled cubic Schrodinger systems.

The package discretizes the coupled system on uniform Dirichlet grids and
minimizes the energy on the natural constraint set by projected gradient
descent, then extracts concentration and decay observables from converged
states.  ``sbsol.harness`` provides the CLI, run configuration, sweeps and
verification suites.
"""

from .errors import (ConfigError, GridMismatch, InitFailed, InvalidPotential,
                     NoBoxConvergence, NotProjectable, OutOfDomain,
                     SweepCapExceeded, TrivialState, WindowTooSmall)
from .fieldio import field_from_sbsf, read_sbsf, write_sbsf
from .grid import (DomainSpec, Grid, ScalarField, build_grid, dirichlet_form,
                   field_from_callable, grad_norm_sq, integrate,
                   laplacian_apply, sample_field)
from .model import (FormsReport, ModelSpec, PotentialSpec, State,
                    energy, energy_directional_derivative,
                    euler_lagrange_residual, eval_potential, nehari_project,
                    quadratic_form, quartic_form, quotient_objective,
                    residual_norm, trap_diagnostics)
from .solver import (CMapResult, GroundStateReport, SolverConfig, c_map,
                     default_init, solve_ground_state, solve_whole_space)
from .analysis import (DecayFit, PeakReport, RadialDiagnostics,
                       RescaledProfile, ScalingTable, decay_fit, find_peaks,
                       radial_diagnostics, radial_profile, rescale_profile,
                       scaling_table)

__version__ = "0.1.0"

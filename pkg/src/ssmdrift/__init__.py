"""Scattering-map series models and drift-orbit planning near Sun-Earth L1.

The package covers the pipeline end to end: rotating-frame three-body
dynamics and a high-order integrator with section events, a
Fourier/Newton series representation of scattering maps fitted from
sample grids, the inner twist map and flow-realizable transitions, and
drift-orbit construction (greedy and shortest-time via a cell graph).
"""

from ._accel import NUMBA_ENABLED
from .grid import (GridFormatError, GridInvariantError, ScatteringGrid,
                   TorusSamples, load_grid, make_grid, save_grid)
from .inner import (DomainExitError, InnerModel, InnerRangeError, TimeModel,
                    TransitionResult, apply_inner, apply_transition,
                    default_inner_model, inner_time, load_inner_model,
                    save_inner_model)
from .integrate import (IntegratorConfig, NoCrossingError, SectionEvent,
                        StepUnderflowError, integrate, integrate_to_section)
from .newton_poly import (DuplicateNodeError, NewtonPoly,
                          divided_differences, newton_interpolate)
from .planner import (CellGraph, CellGrid, DriftOrbit, DriftStep,
                      LivelockError, MaxStepsExceededError, UnreachableError,
                      build_cell_graph, classify, dijkstra, drift_time,
                      greedy_drift, neighborhood_distance,
                      orbit_shortest_time, save_graph, save_orbit)
from .rtbp import (SUN_EARTH_MU, EigenstructureError, Frequencies,
                   SingularityError, effective_potential, hamiltonian,
                   jacobi_constant, l1_state, linear_frequencies, locate_L1,
                   potential_gradient, to_momenta, to_velocities,
                   vector_field)
from .ssm import (ConvergenceError, ErrorReport, FitError, OutOfRangeError,
                  Portrait, ResonanceError, SSMModel, SeriesDerivs,
                  SingularDenominatorError, apply_sm, approximation_error,
                  eval_derivs, fit_fourier_torus, fit_ssm, kam_curve,
                  kam_first_order, load_model, locate_resonance,
                  phase_portrait, phase_shift_bounds, save_model, twist)
from .synth import (GroundTruthSpec, build_model, generate_grid,
                    make_paper_magnitude_model, make_two_harmonic_model)

__version__ = "0.1.0"

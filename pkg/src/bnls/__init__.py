"""Biharmonic NLS on cylindrically symmetric data: solver plus blowup diagnostics.

The evolution is i u_t = Lap^2 u - mu Lap u - |u|^{2 sigma} u on fields
u(r, z) with r the radius in the first d-1 coordinates and z the last one.
"""

from .geometry import Grid, CutoffProfile, CutoffCertificate, build_grid, build_cutoff, certify_cutoff
from .operators import Field, FunctionalSnapshot, laplacian, bilaplacian, functionals, lp_norm, axial_trace_sup
from .solver import Propagator, SimState, BlowupVerdict, linear_propagator, step, evolve, detect_blowup
from .groundstate import GroundStateResult, ThresholdSet, CriterionReport, solve_ground_state, thresholds, check_blowup_criteria
from .diagnostics import (VirialReport, MassCriticalReport, virial, virial_rate_report,
                          mass_critical_report, check_radial_sobolev, check_gn_1d,
                          check_tail_estimate, check_axial_derivative_bound)
from .config import SimConfig, preset, preset_names
from .harness import run_scenario, save_checkpoint, load_checkpoint

__version__ = "0.1.0"

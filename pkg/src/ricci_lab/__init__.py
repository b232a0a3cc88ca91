"""Ricci flow laboratory for symmetric sphere metrics."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .warped import (WarpedProfile, CurvatureField, curvature, make_round_profile,  # noqa: E402
                     profile_from_function, scale, to_arclength_gauge, c0_distance_to_round,
                     laplacian_radial, spectral_curvature, check_curvature_cone,
                     distance_and_balls)
from .homogeneous import BergerState, berger_curvature, normalize_berger, round_berger  # noqa: E402
from .flow import (FlowConfig, FlowTrace, run_flow, step_warped, step_berger,  # noqa: E402
                   estimate_extinction, doubling_constant)
from .checks import (CheckReport, rho, ode_comparison, check_max_principle,  # noqa: E402
                     check_extinction_bound, check_scalar_evolution, check_harnack,
                     check_rm_le_scalar, check_backward_propagation, pinching_deficit,
                     check_distance_distortion)
from .barrier import (BumpProfile, BarrierSpec, make_bump, select_alpha, select_A,  # noqa: E402
                      select_t1, build_barrier_spec, eval_barrier, verify_subsolution)
from .width import (WidthReport, sweepout_sup_area, minimal_latitude_spheres,  # noqa: E402
                    width_proxy, width_flow_probe)
from .config import ExperimentConfig  # noqa: E402
from .families import generate_family  # noqa: E402
from .sweep import RigidityRow, run_rigidity_sweep  # noqa: E402
from .reports import emit_reports  # noqa: E402

"""Prescribed-time, pointing-constrained boresight reorientation on the unit sphere.

A numpy library (plus a small CLI) covering: saturated prescribed-time gain
functions and their convergence bounds, potential-field guidance with
keep-out cones on the sphere, a prescribed-time disturbance observer, a
barrier-constrained reduced-attitude tracking controller, and a closed-loop
rigid-body simulator with scenario files, batch campaigns, and CSV/JSON
output.
"""

from .controller import (
    ControlGains,
    TrackingErrors,
    apf_controller,
    control_law,
    feedforward_terms,
    pd_controller,
    tracking_errors,
    tube_level_for_margin,
    virtual_control,
    virtual_control_rate,
)
from .dynamics import (
    PlantParams,
    SimState,
    Trajectory,
    closed_loop_rate,
    disturbance_torque,
    inertia_uncertainty,
    initial_state,
    propagate_free_body,
    simulate,
)
from .errors import (
    AntipodalInput,
    BoresightError,
    BoundaryViolation,
    DegenerateMatrix,
    DomainError,
    HypothesisViolated,
    NoSolution,
    NonFiniteState,
    ParseError,
    SimulationFatal,
    TubeBreach,
    ValidationError,
)
from .guidance import (
    ForbiddenZone,
    GuidanceConfig,
    ReferenceSample,
    ValidationReport,
    baseline_law,
    critical_point_residual,
    find_critical_point,
    potential,
    potential_grad,
    propagate_reference,
    pt_guidance_law,
    pt_guidance_law_rate,
    repulsion,
    repulsion_grad,
    repulsion_hess,
    validate_config,
    zone_clearances,
)
from .manifold import (
    cross_matrix,
    exp_so3,
    geodesic_distance,
    minimal_rotation,
    reorthonormalize,
    unit_vector,
)
from .observer import DisturbanceObserver
from .ppta import (
    LemmaBounds,
    PptaSchedule,
    ppta_gain,
    ppta_gain_rate,
    pta_gain,
    residual_set_bounds,
    time_scale_transform,
)
from .scenario import (
    MetricsSummary,
    Scenario,
    batch,
    bundled_initials,
    bundled_scenario_path,
    compute_metrics,
    critical_points_report,
    load_bundled,
    load_initials,
    load_scenario,
    run,
    sample_free_initials,
    save_scenario,
    validate_scenario,
    with_initial,
)

__version__ = "0.1.0"

"""einet: simulator and ergodic-theory test bench for a piecewise-smooth
excitation-inhibition network flow.

The base environment is a suspended hyperbolic toral automorphism; N
inhibitory units are circle fibers that receive a rotation kick at every
section crossing and slow the base down while they sit in the inhibited arc.
The package provides the exact section return map, its tangent cocycle and
Lyapunov spectrum, event-exact continuous trajectories and activation
rasters, and the expanding-curve pushforward diagnostics (range growth,
sink concentration, pole-mass bounds, monotone lifts).
"""

from .errors import (
    EINetError,
    InfeasibleGeometry,
    NonConvergence,
    NotHyperbolic,
    OnSingularity,
    SchemaError,
)
from .flows import FlowEvaluation, ns_evolve, ns_image_of_arc
from .params import (
    AnosovSpec,
    InhibitionSpec,
    ModelParams,
    NSFlowSpec,
    RotationMapSpec,
    ValidationReport,
    anosov_data,
    build_rotation_map,
    load_params,
    model_params,
    params_from_dict,
    params_hash,
    params_to_dict,
    projective_flow,
    return_time,
    save_params,
    sine_flow,
    speed_factor,
    tabulated_flow,
    validate_params,
)
from .returnmap import (
    LyapunovResult,
    SectionPoint,
    StepRecord,
    TangentFrame,
    birkhoff_average,
    h1,
    h2,
    lyapunov_spectrum,
    step,
    sync_test,
    tangent_step,
)
from .flowsim import FlowState, activation_raster, evolve, sample_trajectory, section_orbit
from .curves import (
    CurveRun,
    LiftedGraph,
    PiecewiseGraph,
    apply_phi1,
    apply_phi2,
    apply_phi3,
    concentration_stats,
    init_curve,
    lift,
    min_slope_off_markers,
    near_singularity_mass,
    range_of,
    run_curve,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

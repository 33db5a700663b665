"""Longitudinal vehicle-platoon toolkit: communication topologies, distributed
PID-A gain certification, and closed-loop nonlinear simulation with a
feedback-linearizing torque law."""

__version__ = "0.1.0"

from .analysis import (
    ClosedLoopSystem,
    block_spectrum_union_check,
    build_closed_loop,
    is_hurwitz,
)
from .control import (
    GainVector,
    SpacingPolicy,
    StabilityCertificate,
    TABLE_GAINS,
    TABLE_RANGES,
    block_char_poly,
    certify_gains,
    control_input,
    routh_first_column,
    routh_verdict,
    steady_state_error,
    synthesize_kv,
)
from .dynamics import (
    EnvSample,
    LinearModel,
    VehicleParams,
    VehicleState,
    acceleration_from_torque,
    equilibrium_torque,
    feedback_linearize,
    linear_model,
    nonlinear_derivative,
)
from .errors import (
    ConfigError,
    LeaderUnreachableError,
    PlatoonError,
    RouthMarginalError,
    SimulationBlowUpError,
    TheoremNotApplicableError,
    TopologyError,
)
from .simulation import (
    DisturbanceSchedule,
    Metrics,
    SimConfig,
    Trajectory,
    compute_metrics,
    metrics_csv,
    run,
    schedule_epochs,
    siso_disturbance_run,
    trajectory_csv,
)
from .topology import (
    CouplingSpectrum,
    Topology,
    build_named,
    coupling_spectrum,
    gershgorin_certificate,
    has_leader_spanning_tree,
    load_topology,
    save_topology,
)

"""Robust pulse engineering for the NV / 13C three-level effective model.

Sequential, BB1 and CORPSE constructions of the entangling gate,
fidelity-versus-error scans, and a robustness-averaged GRAPE optimizer,
all on the (|0>, |2>, |3>) subspace with dimensionless units.
"""

from .linalg import (
    IDENTITY,
    LEVELS,
    NV_CONSTANTS,
    SIGMA_X_20,
    SIGMA_X_23,
    SIGMA_Y_20,
    SIGMA_Y_23,
    SIGMA_Z_20,
    SIGMA_Z_23,
    Z_TOTAL,
    PhysicalConstants,
    compose,
    effective_hamiltonian,
    expm_unitary,
    gate_fidelity,
    ket,
    sigma,
    sigma_x,
    sigma_y,
    sigma_z,
)
from .sequences import (
    Channel,
    ErrorKind,
    ErrorModel,
    PulseSegment,
    PulseSequence,
    bb1_sequence,
    corpse_sequence,
    export_sequence_table,
    propagator,
    segment_propagator,
    sequence_table,
    sequential_gate,
    sequential_segments,
)
from .scanning import (
    GOOD_FIDELITY_THRESHOLD,
    ErrorGrid,
    ScanError,
    ScanResult,
    export_csv,
    good_fidelity_window,
    ple_series_fidelity,
    quadratic_loss_coefficient,
    render_csv,
    scan,
    write_plot_script,
)
from .grape import (
    CONTROL_BOUND,
    CONTROL_HAMILTONIANS,
    DRIFT,
    PULSE_CSV_HEADER,
    ControlSchedule,
    GrapeConfig,
    GrapeNumericsError,
    OptimizedPulse,
    ascend,
    ascend_with_restarts,
    clip_controls,
    export_pulse_csv,
    gradient,
    import_pulse_csv,
    penalized_performance,
    performance,
    power_penalty,
    pulses_to_schedule,
    render_pulse_csv,
    schedule_propagator,
    schedule_to_pulses,
    step_propagator,
    trained_min_fidelity,
)

__version__ = "0.1.0"

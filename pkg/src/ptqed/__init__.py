"""Exact simulator of a cavity-QED partial-teleportation protocol.

Four two-level atoms and one cavity mode: an entangled atom pair is
partially teleported by swapping one partner onto a third atom through an
atom-mode channel and a two-stage entangled-basis measurement.  The ideal
protocol succeeds with unit fidelity on every detection record; the
`decoherence` module adds phenomenological atomic decay, and the
`fluctuation` module quantifies the cost of Gaussian interaction-time
jitter against a closed-form expression.
"""

from .qstate import (
    DensityMatrix,
    InvariantViolation,
    LayoutError,
    ShapeError,
    StateVector,
    SubsystemLayout,
    basis_state,
    embed,
    fidelity,
    partial_trace,
    project_and_condition,
    tensor,
)
from .gates import (
    GateSpec,
    dispersive_unitary,
    pauli,
    ramsey_unitary,
    resonant_unitary,
)
from .protocol import (
    BellOutcome,
    IdealReport,
    ProtocolParams,
    Schedule,
    alice_stage1,
    alice_stage2,
    assemble_total,
    bell_state,
    bob_correct,
    prepare_channel,
    prepare_input,
    run_ideal,
    run_single_shot,
    teleport_target,
)
from .decoherence import (
    DampingChannel,
    DampingEvent,
    apply_damping,
    apply_dephasing,
    decay_report,
    default_damping_events,
    fidelity_vs_time,
    run_with_decay,
)
from .fluctuation import (
    TimeNoiseModel,
    averaged_fidelity,
    averaged_state,
    branch_match_report,
    closed_form_fidelity,
    fidelity_surface,
)

__version__ = "0.1.0"

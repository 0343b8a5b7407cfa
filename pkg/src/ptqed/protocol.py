"""End-to-end orchestration of the ideal partial-teleportation protocol.

The register holds four two-level atoms and one cavity mode.  Atoms 1 and
2 carry the entangled input c0|g,e> + c1|e,g>; atom 3 and the mode share
the nonlocal channel (|e,0> - i|g,1>)/sqrt(2) prepared by a resonant
quarter-swap.  Alice measures atom 1 and the mode in the entangled basis
in two stages (atom-1 detection separates the Psi/Phi classes, a probe
atom 4 then reads the +/- phase out of the mode), sends the two detected
levels to Bob, and Bob applies the corresponding correction on atom 3.
The corrected atoms (3,2) then carry the input entanglement exactly:
particle 3 has taken the role of particle 1.

Detection signature -> outcome: (g,e) Psi+, (g,g) Psi-, (e,g) Phi+,
(e,e) Phi-.  Corrections: identity, z, y, x on atom 3 respectively.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from . import gates
from .qstate import (
    DensityMatrix,
    StateVector,
    SubsystemLayout,
    apply_operator,
    basis_state,
    fidelity,
    level_index,
    project_and_condition,
    tensor,
)

ATOM1, ATOM2, ATOM3, ATOM4, MODE = "atom1", "atom2", "atom3", "atom4", "modeA"

#: Pulse angles fixed by the protocol: quarter swap for the channel,
#: a pi phase kick for the discrimination, a half swap for the probe.
CHANNEL_ANGLE = np.pi / 4
PHASE_KICK_ANGLE = np.pi
PROBE_ANGLE = np.pi / 2


class BellOutcome(enum.Enum):
    """The four entangled-basis outcomes with their detection signatures."""

    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"

    @property
    def detection(self) -> tuple[str, str]:
        """(atom-1 level, atom-4 level) announcing this outcome."""
        return _DETECTION[self]

    @classmethod
    def from_detection(cls, atom1_level: str, atom4_level: str) -> "BellOutcome":
        return _FROM_DETECTION[(atom1_level, atom4_level)]

    @property
    def correction(self) -> Optional[np.ndarray]:
        """Bob's single-atom correction, None for the identity."""
        return {
            BellOutcome.PSI_PLUS: None,
            BellOutcome.PSI_MINUS: gates.PAULI_Z,
            BellOutcome.PHI_PLUS: gates.PAULI_Y,
            BellOutcome.PHI_MINUS: gates.PAULI_X,
        }[self]


_DETECTION = {
    BellOutcome.PSI_PLUS: ("g", "e"),
    BellOutcome.PSI_MINUS: ("g", "g"),
    BellOutcome.PHI_PLUS: ("e", "g"),
    BellOutcome.PHI_MINUS: ("e", "e"),
}
_FROM_DETECTION = {v: k for k, v in _DETECTION.items()}

ALL_OUTCOMES = tuple(BellOutcome)


@dataclass(frozen=True)
class Schedule:
    """Event times (seconds) at which decay is accounted, strictly ordered.

    t1: atom 1 leaves the first Ramsey zone.
    t2: atom 1 leaves the second Ramsey zone and is detected.
    t3: the probe atom 4 leaves the cavity.
    t4: atom 4 leaves its Ramsey zone and is detected (protocol complete).
    """

    t1: float = 2e-6
    t2: float = 5e-4 + 2e-6 + 2e-6
    t3: float = 1e-4 + 5e-4 + 2e-6 + 2e-6
    t4: float = 2e-6 + 1e-4 + 5e-4 + 2e-6 + 2e-6

    def __post_init__(self):
        if not (0 <= self.t1 < self.t2 < self.t3 < self.t4):
            raise ValueError(f"schedule times must satisfy 0 <= t1 < t2 < t3 < t4, got {self}")

    @property
    def times(self) -> tuple[float, float, float, float]:
        return (self.t1, self.t2, self.t3, self.t4)


@dataclass(frozen=True)
class ProtocolParams:
    """Physical constants and run configuration.

    c0, c1: input-state coefficients, |c0|^2 + |c1|^2 = 1 (not silently
    renormalized).  lam and delta are the atom-mode coupling and detuning
    in rad/s; the dispersive shift is lam^2/delta.  kappa is the atomic
    amplitude decay rate in 1/s (excited population decays as
    exp(-2 kappa t)).  nbar_check optionally holds (mean photon number,
    cavity damping rate) for the dispersive-validity warning.
    """

    c0: complex = 1 / np.sqrt(2)
    c1: complex = 1 / np.sqrt(2)
    lam: float = 2 * np.pi * 25e3
    delta: float = 25 * 2 * np.pi * 25e3
    kappa: float = 100.0
    fock_cutoff: int = 1
    schedule: Schedule = field(default_factory=Schedule)
    nbar_check: Optional[tuple[float, float]] = None

    def __post_init__(self):
        total = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"input coefficients not normalized: |c0|^2+|c1|^2 = {total}")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.fock_cutoff < 1:
            raise ValueError("fock_cutoff must be >= 1 to represent a single photon")
        if self.nbar_check is not None:
            nbar, gamma = self.nbar_check
            ratio = nbar * self.lam**2 / (self.delta**2 + gamma**2)
            if ratio >= 0.01:
                warnings.warn(
                    f"dispersive validity is marginal: nbar*lam^2/(delta^2+gamma^2) = {ratio:.3g}",
                    stacklevel=2,
                )

    @property
    def chi(self) -> float:
        """Dispersive shift lam^2/delta (rad/s)."""
        return self.lam**2 / self.delta

    def with_coefficients(self, c0: complex, c1: complex) -> "ProtocolParams":
        return replace(self, c0=c0, c1=c1)


def input_layout() -> SubsystemLayout:
    return SubsystemLayout([(ATOM1, 2), (ATOM2, 2)])


def channel_layout(fock_cutoff: int = 1) -> SubsystemLayout:
    return SubsystemLayout([(ATOM3, 2), (MODE, fock_cutoff + 1)])


def prepare_input(c0: complex, c1: complex) -> StateVector:
    """The state to teleport: c0|g>_1|e>_2 + c1|e>_1|g>_2.

    Raises if the coefficients are not normalized; nothing is rescaled
    behind the caller's back.
    """
    total = abs(c0) ** 2 + abs(c1) ** 2
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"input coefficients not normalized: |c0|^2+|c1|^2 = {total}")
    layout = input_layout()
    amps = np.zeros(layout.dim, dtype=complex)
    amps[layout.flat_index({ATOM1: 0, ATOM2: 1})] = c0
    amps[layout.flat_index({ATOM1: 1, ATOM2: 0})] = c1
    return StateVector(layout, amps)


def prepare_channel(fock_cutoff: int = 1, angle: float = CHANNEL_ANGLE) -> StateVector:
    """Entangle atom 3 with the vacuum mode by a resonant quarter swap.

    At the nominal angle the result is (|e,0> - i|g,1>)/sqrt(2).
    """
    start = basis_state(channel_layout(fock_cutoff), {ATOM3: 1, MODE: 0})
    return apply_operator(start, gates.resonant_unitary(angle, fock_cutoff), [ATOM3, MODE])


def assemble_total(input_state: StateVector, channel: StateVector) -> StateVector:
    """Join the input pair with the channel into one register."""
    return tensor([input_state, channel])


def join_probe_atom(state):
    """Adjoin the probe atom 4 in |g>; it enters the story only now."""
    probe = basis_state(SubsystemLayout([(ATOM4, 2)]), {ATOM4: 0})
    if isinstance(state, StateVector):
        return tensor([state, probe])
    probe_dm = probe.to_density()
    return DensityMatrix(
        state.layout.concat(probe_dm.layout), np.kron(state.matrix, probe_dm.matrix)
    )


def bell_state(outcome: BellOutcome, fock_cutoff: int = 1) -> StateVector:
    """The entangled atom-1/mode basis states the measurement resolves.

    Psi+- = (-i|g,1> +- |e,0>)/sqrt(2);  Phi+- = (|g,0> +- i|e,1>)/sqrt(2).
    """
    layout = SubsystemLayout([(ATOM1, 2), (MODE, fock_cutoff + 1)])
    amps = np.zeros(layout.dim, dtype=complex)
    g1, e0 = layout.flat_index({ATOM1: 0, MODE: 1}), layout.flat_index({ATOM1: 1, MODE: 0})
    g0, e1 = layout.flat_index({ATOM1: 0, MODE: 0}), layout.flat_index({ATOM1: 1, MODE: 1})
    if outcome is BellOutcome.PSI_PLUS:
        amps[g1], amps[e0] = -1j, 1.0
    elif outcome is BellOutcome.PSI_MINUS:
        amps[g1], amps[e0] = -1j, -1.0
    elif outcome is BellOutcome.PHI_PLUS:
        amps[g0], amps[e1] = 1.0, 1j
    else:
        amps[g0], amps[e1] = 1.0, -1j
    return StateVector(layout, amps / np.sqrt(2.0))


State = Union[StateVector, DensityMatrix]


def stage1_gates(state: State, phase_angle: float = PHASE_KICK_ANGLE) -> State:
    """Atom 1 crosses a Ramsey zone, the cavity (phase kick), and a second
    Ramsey zone; no detection yet."""
    cutoff = state.layout.dim_of(MODE) - 1
    state = apply_operator(state, gates.ramsey_unitary(), [ATOM1])
    state = apply_operator(state, gates.dispersive_unitary(phase_angle, cutoff), [ATOM1, MODE])
    return apply_operator(state, gates.ramsey_unitary(), [ATOM1])


def stage2_gates(state: State, probe_angle: float = PROBE_ANGLE) -> State:
    """The probe atom 4 (already joined, in |g>) swaps with the mode and
    crosses the second Ramsey zone; its first Ramsey zone stays off."""
    cutoff = state.layout.dim_of(MODE) - 1
    state = apply_operator(state, gates.resonant_unitary(probe_angle, cutoff), [ATOM4, MODE])
    return apply_operator(state, gates.ramsey_unitary(), [ATOM4])


def _detect(state: State, label: str, detect, rng):
    """Project an atom on a chosen or sampled level."""
    if detect is None:
        if rng is None:
            raise ValueError("either force a detection level or pass an rng to sample one")
        p_g, _ = project_and_condition(state, label, "g")
        detect = "g" if rng.random() < p_g else "e"
    prob, conditioned = project_and_condition(state, label, detect)
    return detect, prob, conditioned


def alice_stage1(state: State, detect: Optional[str] = None,
                 rng: Optional[np.random.Generator] = None):
    """Run the atom-1 sequence and detect atom 1.

    Returns (level, probability, conditioned state).  Level g announces
    the Psi class, e the Phi class; the mode keeps the +/- phase.
    """
    return _detect(stage1_gates(state), ATOM1, detect, rng)


def alice_stage2(state: State, detect: Optional[str] = None,
                 rng: Optional[np.random.Generator] = None):
    """Join the probe atom if needed, run its sequence, detect atom 4."""
    if ATOM4 not in state.layout.labels:
        state = join_probe_atom(state)
    return _detect(stage2_gates(state), ATOM4, detect, rng)


def bob_correct(outcome: BellOutcome, state: State) -> State:
    """Apply Bob's correction on atom 3 (identity on atom 2)."""
    op = outcome.correction
    if op is None:
        return state
    return apply_operator(state, op, [ATOM3])


def teleport_target(c0: complex, c1: complex) -> StateVector:
    """The ideal teleported state c0|g>_3|e>_2 + c1|e>_3|g>_2 on (atom3, atom2)."""
    layout = SubsystemLayout([(ATOM3, 2), (ATOM2, 2)])
    amps = np.zeros(layout.dim, dtype=complex)
    amps[layout.flat_index({ATOM3: 0, ATOM2: 1})] = c0
    amps[layout.flat_index({ATOM3: 1, ATOM2: 0})] = c1
    return StateVector(layout, amps)


def _target_on(layout: SubsystemLayout, params: ProtocolParams,
               outcome: BellOutcome, mode_level: int = 0) -> StateVector:
    """Teleport target embedded in a full register layout: detected atoms
    pinned at their announced levels, mode in a definite Fock level."""
    l1, l4 = outcome.detection
    amps = np.zeros(layout.dim, dtype=complex)
    base = {MODE: mode_level}
    if ATOM1 in layout.labels:
        base[ATOM1] = level_index(l1)
    if ATOM4 in layout.labels:
        base[ATOM4] = level_index(l4)
    amps[layout.flat_index({**base, ATOM2: 1, ATOM3: 0})] = params.c0
    amps[layout.flat_index({**base, ATOM2: 0, ATOM3: 1})] = params.c1
    return StateVector(layout, amps)


@dataclass(frozen=True)
class BranchResult:
    """One exhaustively evaluated detection record."""

    outcome: BellOutcome
    probability: float
    fidelity: float
    state: StateVector  # corrected register state, atoms 1/4 pinned


@dataclass(frozen=True)
class IdealReport:
    branches: tuple[BranchResult, ...]

    def branch(self, outcome: BellOutcome) -> BranchResult:
        return next(b for b in self.branches if b.outcome is outcome)


def run_ideal(params: ProtocolParams) -> IdealReport:
    """Evaluate all four detection records exhaustively.

    Each record carries probability 1/4 and post-correction fidelity 1
    with the relabeled input state, for any normalized coefficients.
    """
    total = assemble_total(
        prepare_input(params.c0, params.c1), prepare_channel(params.fock_cutoff)
    )
    after1 = stage1_gates(total)
    branches = []
    for outcome in ALL_OUTCOMES:
        l1, l4 = outcome.detection
        p1, s1 = project_and_condition(after1, ATOM1, l1)
        s2 = stage2_gates(join_probe_atom(s1))
        p4, s4 = project_and_condition(s2, ATOM4, l4)
        corrected = bob_correct(outcome, s4)
        target = _target_on(corrected.layout, params, outcome)
        branches.append(
            BranchResult(outcome, p1 * p4, fidelity(corrected, target), corrected)
        )
    return IdealReport(tuple(branches))


def run_single_shot(params: ProtocolParams, rng: np.random.Generator):
    """Sample one protocol run: detections drawn from the Born rule.

    Returns (outcome, corrected register state).
    """
    total = assemble_total(
        prepare_input(params.c0, params.c1), prepare_channel(params.fock_cutoff)
    )
    l1, _, s1 = alice_stage1(total, rng=rng)
    l4, _, s4 = alice_stage2(s1, rng=rng)
    outcome = BellOutcome.from_detection(l1, l4)
    return outcome, bob_correct(outcome, s4)

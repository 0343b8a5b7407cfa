"""Phenomenological decay of free atomic excited states during the protocol.

An atom coupled to a vacuum environment for a time dt keeps its excited
amplitude with weight exp(-kappa dt) and emits with probability
p = 1 - exp(-2 kappa dt).  Tracing the environment leaves the two-element
operator sum

    E0 = diag(1, exp(-kappa dt))         (no decay)
    E1 = sqrt(p) |g><e|                  (decay)

which sends rho_ee -> exp(-2 kappa dt) rho_ee, moves the lost population
to rho_gg, and damps coherences by exp(-kappa dt).  A coherence-only
variant with the same exp(-kappa dt) factor on the off-diagonals but
frozen populations is provided as a second curve family (see below).

Decay is accounted at four event times: after atom 1 leaves the first
Ramsey zone (t1), after it leaves the second one and is detected (t2),
after the probe atom leaves the cavity (t3), and after the probe leaves
its Ramsey zone and is detected (t4).  Each event applies the channel for
the elapsed interval to every atom that was free and undetected during
it; detected atoms leave the register and the cavity mode is lossless.

Benchmark note.  For the nominal operating point (kappa = 100/s, the
default schedule, equal input coefficients, outcome Psi+), the expected
reference behavior is a completion fidelity rounding to 0.99 and a fall
to 2/3 by t = 5.78e-3 s.  The full amplitude-damping schedule starting at
t = 0 gives F(t4) ~ 0.81 and reaches 2/3 far earlier, and the
coherence-only variant from t = 0 gives F(t4) ~ 0.94: neither reproduces
the reference points.  Both points ARE reproduced, to ~1%, by
coherence-only decay of the teleported state clocked from the atom-1
detection at t2, i.e. F(t) = (1 + exp(-2 kappa (t - t2)))/2 for equal
coefficients.  `decay_report` computes all four (variant, onset)
combinations and names the matching one; the discrepancy is a property
of the reference model itself, not something this module tunes away.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import gates
from .protocol import (
    ATOM1,
    ATOM2,
    ATOM3,
    ATOM4,
    MODE,
    BellOutcome,
    ProtocolParams,
    assemble_total,
    bob_correct,
    join_probe_atom,
    prepare_channel,
    prepare_input,
    teleport_target,
)
from .qstate import (
    DensityMatrix,
    apply_kraus,
    apply_operator,
    fidelity,
    partial_trace,
    project_and_condition,
)

CPTP_ATOL = 1e-12

AMPLITUDE = "amplitude"
DEPHASING = "dephasing"
VARIANTS = (AMPLITUDE, DEPHASING)

#: Reference values this configuration is benchmarked against: completion
#: fidelity ~0.99 at t4, and fidelity 2/3 at the late time below.
REFERENCE_COMPLETION_FIDELITY = 0.99
REFERENCE_LATE_TIME = 5.78e-3
REFERENCE_LATE_FIDELITY = 2.0 / 3.0


def amplitude_kraus(kappa: float, dt: float) -> list[np.ndarray]:
    """No-decay/decay operator pair for one atom over an interval."""
    if dt < 0:
        raise ValueError(f"negative interval dt = {dt}")
    eps = np.exp(-kappa * dt)
    p = max(0.0, 1.0 - eps * eps)
    e0 = np.array([[1.0, 0.0], [0.0, eps]], dtype=complex)
    e1 = np.array([[0.0, np.sqrt(p)], [0.0, 0.0]], dtype=complex)
    return [e0, e1]


def dephasing_kraus(kappa: float, dt: float) -> list[np.ndarray]:
    """Coherence-only variant: off-diagonals shrink by exp(-kappa dt),
    populations frozen."""
    if dt < 0:
        raise ValueError(f"negative interval dt = {dt}")
    eps = np.exp(-kappa * dt)
    k0 = np.sqrt((1.0 + eps) / 2.0) * np.eye(2, dtype=complex)
    k1 = np.sqrt((1.0 - eps) / 2.0) * gates.PAULI_Z
    return [k0, k1]


def _kraus_for(variant: str, kappa: float, dt: float) -> list[np.ndarray]:
    if variant == AMPLITUDE:
        return amplitude_kraus(kappa, dt)
    if variant == DEPHASING:
        return dephasing_kraus(kappa, dt)
    raise ValueError(f"unknown decay variant {variant!r}; expected one of {VARIANTS}")


@dataclass(frozen=True)
class DampingChannel:
    """Single-atom decay channel over an interval dt at rate kappa."""

    kappa: float
    dt: float

    def __post_init__(self):
        if self.dt < 0:
            raise ValueError(f"negative interval dt = {self.dt}")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")

    @property
    def jump_probability(self) -> float:
        return 1.0 - np.exp(-2.0 * self.kappa * self.dt)

    def kraus_operators(self) -> list[np.ndarray]:
        return amplitude_kraus(self.kappa, self.dt)

    def cptp_defect(self) -> float:
        """max |sum E^dag E - I|; zero for a trace-preserving channel."""
        ks = self.kraus_operators()
        s = sum(k.conj().T @ k for k in ks)
        return float(np.max(np.abs(s - np.eye(2))))


@dataclass(frozen=True)
class DampingEvent:
    """One decay accounting point: which atoms were free since the last one."""

    time: float
    affected_atoms: tuple[str, ...]
    note: str = ""


def default_damping_events(params: ProtocolParams) -> tuple[DampingEvent, ...]:
    """The literal reading of the event list: atoms 1-3 decay until the
    atom-1 detection, atoms 2-3 afterwards, the probe only once it can be
    excited."""
    t1, t2, t3, t4 = params.schedule.times
    return (
        DampingEvent(t1, (ATOM1, ATOM2, ATOM3), "atom 1 leaves first Ramsey zone"),
        DampingEvent(t2, (ATOM1, ATOM2, ATOM3), "atom 1 leaves second Ramsey zone, detected"),
        DampingEvent(t3, (ATOM2, ATOM3), "probe atom leaves the cavity"),
        DampingEvent(t4, (ATOM2, ATOM3, ATOM4), "probe leaves Ramsey zone, detected"),
    )


def post_measurement_events(params: ProtocolParams) -> tuple[DampingEvent, ...]:
    """Alternative onset: the state decays only once it is at Bob, i.e.
    from the atom-1 detection at t2 (see the benchmark note above)."""
    t1, t2, t3, t4 = params.schedule.times
    return (
        DampingEvent(t1, (), "pre-measurement, decay not accounted"),
        DampingEvent(t2, (), "pre-measurement, decay not accounted"),
        DampingEvent(t3, (ATOM2, ATOM3), "probe atom leaves the cavity"),
        DampingEvent(t4, (ATOM2, ATOM3, ATOM4), "probe leaves Ramsey zone, detected"),
    )


def _validate_events(events: Sequence[DampingEvent], params: ProtocolParams) -> None:
    if len(events) != 4:
        raise ValueError("the protocol has exactly four decay events")
    times = [e.time for e in events]
    if any(b < a for a, b in zip(times, times[1:])) or times[0] < 0:
        raise ValueError(f"event times must be non-decreasing and >= 0, got {times}")
    known = {ATOM1, ATOM2, ATOM3, ATOM4}
    for e in events:
        unknown = set(e.affected_atoms) - known
        if unknown:
            raise ValueError(f"event at t={e.time} names unknown atoms {sorted(unknown)}")


def apply_damping(rho: DensityMatrix, atom: str, kappa: float, dt: float) -> DensityMatrix:
    """Amplitude-damp one atom of a register for an interval dt."""
    return apply_kraus(rho, amplitude_kraus(kappa, dt), [atom])


def apply_dephasing(rho: DensityMatrix, atom: str, kappa: float, dt: float) -> DensityMatrix:
    """Coherence-only damping of one atom for an interval dt."""
    return apply_kraus(rho, dephasing_kraus(kappa, dt), [atom])


@dataclass(frozen=True)
class DecayResult:
    """Conditioned, corrected teleported state and its record probability."""

    rho32: DensityMatrix
    probability: float
    fidelity: float


def run_with_decay(
    params: ProtocolParams,
    outcome: BellOutcome,
    *,
    variant: str = AMPLITUDE,
    events: Optional[Sequence[DampingEvent]] = None,
    decay_until: Optional[float] = None,
) -> DecayResult:
    """Interleave the protocol with decay events and condition on `outcome`.

    Gates and detections are instantaneous; at each event time the event's
    gates are applied first and the decay channel for the elapsed interval
    right after.  `decay_until` truncates decay accumulation at that time
    (events later than it still run their gates loss-free), which is how
    the partially-decayed points of the fidelity curve are produced.
    Returns the normalized state of atoms (3, 2) after Bob's correction.
    """
    if events is None:
        events = default_damping_events(params)
    _validate_events(events, params)
    if decay_until is None:
        decay_until = events[-1].time
    kappa = params.kappa

    def interval(a: float, b: float) -> float:
        return max(0.0, min(b, decay_until) - a) if a < decay_until else 0.0

    def damp(rho: DensityMatrix, atoms: Sequence[str], dt: float) -> DensityMatrix:
        if dt <= 0 or kappa == 0:
            return rho
        ks = _kraus_for(variant, kappa, dt)
        for atom in atoms:
            rho = apply_kraus(rho, ks, [atom])
        return rho

    l1, l4 = outcome.detection
    rho = assemble_total(
        prepare_input(params.c0, params.c1), prepare_channel(params.fock_cutoff)
    ).to_density()

    prev = 0.0
    # event 1: first Ramsey zone (part of the stage-1 gate block, applied
    # as one block at event 2 would misplace atom-1 decay, so stage 1 is
    # split around the cavity crossing here)
    rho = _apply_u(rho, gates.ramsey_unitary(), [ATOM1])
    rho = damp(rho, events[0].affected_atoms, interval(prev, events[0].time))
    prev = events[0].time

    # event 2: cavity phase kick + second Ramsey zone, then atom-1 detection
    cutoff = params.fock_cutoff
    rho = _apply_u(rho, gates.dispersive_unitary(np.pi, cutoff), [ATOM1, MODE])
    rho = _apply_u(rho, gates.ramsey_unitary(), [ATOM1])
    rho = damp(rho, events[1].affected_atoms, interval(prev, events[1].time))
    prev = events[1].time
    p1, rho = project_and_condition(rho, ATOM1, l1)
    if rho is None:
        raise RuntimeError(f"detection record {outcome} has vanished probability")

    # event 3: probe atom enters in |g> and swaps with the mode
    rho = join_probe_atom(rho)
    rho = _apply_u(rho, gates.resonant_unitary(np.pi / 2, cutoff), [ATOM4, MODE])
    rho = damp(rho, events[2].affected_atoms, interval(prev, events[2].time))
    prev = events[2].time

    # event 4: probe Ramsey zone, decay, probe detection, Bob's correction
    rho = _apply_u(rho, gates.ramsey_unitary(), [ATOM4])
    rho = damp(rho, events[3].affected_atoms, interval(prev, events[3].time))
    p4, rho = project_and_condition(rho, ATOM4, l4)
    if rho is None:
        raise RuntimeError(f"detection record {outcome} has vanished probability")
    rho = bob_correct(outcome, rho)

    rho32 = partial_trace(rho, [ATOM3, ATOM2])
    target = teleport_target(params.c0, params.c1)
    return DecayResult(rho32, p1 * p4, fidelity(rho32, target))


def _apply_u(rho: DensityMatrix, u: np.ndarray, targets: Sequence[str]) -> DensityMatrix:
    return apply_operator(rho, u, targets)


def fidelity_vs_time(
    params: ProtocolParams,
    outcome: BellOutcome,
    t_grid: Sequence[float],
    *,
    variant: str = AMPLITUDE,
    events: Optional[Sequence[DampingEvent]] = None,
    free_evolution_beyond_t4: bool = True,
) -> list[tuple[float, float]]:
    """Teleportation fidelity as a function of the decay horizon.

    For t <= t4 the schedule is executed with decay truncated at t (the
    remaining steps run loss-free), so F(0) = 1 exactly.  For t > t4 the
    completed teleported state keeps decaying on both atoms, which makes
    the curve monotone non-increasing there; with the flag off it is held
    at its completion value instead.
    """
    if events is None:
        events = default_damping_events(params)
    t4 = events[-1].time
    target = teleport_target(params.c0, params.c1)
    done = run_with_decay(params, outcome, variant=variant, events=events)
    out = []
    for t in t_grid:
        if t < 0:
            raise ValueError("time grid must be non-negative")
        if t <= t4:
            res = run_with_decay(params, outcome, variant=variant, events=events, decay_until=t)
            out.append((float(t), res.fidelity))
            continue
        if not free_evolution_beyond_t4:
            out.append((float(t), done.fidelity))
            continue
        ks = _kraus_for(variant, params.kappa, t - t4)
        rho = done.rho32
        for atom in (ATOM3, ATOM2):
            rho = apply_kraus(rho, ks, [atom])
        out.append((float(t), fidelity(rho, target)))
    return out


@dataclass(frozen=True)
class DecayCurveSummary:
    variant: str
    onset: str  # "channel-prepared" (t=0) or "post-measurement" (t2)
    completion_fidelity: float
    late_fidelity: float
    matches_reference: bool


@dataclass(frozen=True)
class DecayReport:
    """All curve variants against the reference points, plus the analysis."""

    curves: tuple[DecayCurveSummary, ...]
    matching: Optional[DecayCurveSummary]

    @property
    def text(self) -> str:
        lines = [
            "decay curve variants vs reference points "
            f"(F(t4) ~ {REFERENCE_COMPLETION_FIDELITY}, "
            f"F({REFERENCE_LATE_TIME:g} s) ~ {REFERENCE_LATE_FIDELITY:.4f}):",
        ]
        for c in self.curves:
            mark = "MATCH" if c.matches_reference else "no match"
            lines.append(
                f"  {c.variant:10s} onset={c.onset:16s} "
                f"F(t4)={c.completion_fidelity:.6f} F(late)={c.late_fidelity:.6f}  [{mark}]"
            )
        if self.matching is not None:
            lines.append(
                f"matching model: {self.matching.variant} decay with "
                f"{self.matching.onset} onset."
            )
        else:
            lines.append("no variant reproduces both reference points.")
        lines.append(
            "analysis: with the full schedule (decay from channel preparation), "
            "amplitude damping loses population at exp(-2 kappa t) on every free "
            "excited atom and the conditioned fidelity lands near 0.81 at t4, "
            "while the coherence-only variant lands near 0.94; neither rounds to "
            "0.99.  Both reference points are reproduced only when decay is "
            "clocked from the atom-1 detection (t2) and only coherences decay, "
            "giving F(t) = 1 - 2|c0 c1|^2 (1 - exp(-2 kappa (t - t2))).  The "
            "reference points are therefore consistent with coherence-only decay "
            "of the post-measurement teleported state, not with the amplitude "
            "channel applied over the whole schedule."
        )
        return "\n".join(lines)


def decay_report(params: ProtocolParams, outcome: BellOutcome = BellOutcome.PSI_PLUS,
                 late_time: float = REFERENCE_LATE_TIME) -> DecayReport:
    """Evaluate every (variant, onset) curve at t4 and the late time."""
    t4 = params.schedule.t4
    curves = []
    configs = [
        (AMPLITUDE, "channel-prepared", default_damping_events(params)),
        (DEPHASING, "channel-prepared", default_damping_events(params)),
        (AMPLITUDE, "post-measurement", post_measurement_events(params)),
        (DEPHASING, "post-measurement", post_measurement_events(params)),
    ]
    for variant, onset, events in configs:
        pts = fidelity_vs_time(params, outcome, [t4, late_time], variant=variant, events=events)
        f_t4, f_late = pts[0][1], pts[1][1]
        matches = (
            abs(f_t4 - REFERENCE_COMPLETION_FIDELITY) <= 0.005
            and abs(f_late - REFERENCE_LATE_FIDELITY) <= 0.02
        )
        curves.append(DecayCurveSummary(variant, onset, f_t4, f_late, matches))
    matching = next((c for c in curves if c.matches_reference), None)
    return DecayReport(tuple(curves), matching)

"""Fidelity loss from Gaussian jitter of the atom-field interaction times.

The three cavity interactions (channel quarter swap, phase kick, probe
half swap) each have a true duration t_j drawn from a Gaussian centered
on the nominal duration with spread Delta_j = x * t_j~, where x is the
relative velocity uncertainty.  Ramsey-zone durations are exact.  Since
only the products coupling x time enter, the jitter acts on the pulse
angles: a_j ~ Normal(nominal_j, (x * nominal_j)^2) with nominal angles
(pi/4, pi, pi/2).

The outcome-conditioned averaged state is

    rho = < P |psi(a1,a2,a3)><psi| P > / < trace >,

i.e. the Gaussian average of the *unnormalized* outcome-projected state,
normalized by the averaged record probability at the end (this is the
conditional state of the noise ensemble, and it is what the closed-form
expression below corresponds to).  The fidelity convention that matches
the closed form counts a residual cavity photon as infidelity: the
target is the teleported state together with the cavity vacuum
("vacuum" convention); tracing the mode out instead ("traced") differs
at second order in (x pi)^2.

Gauss-Hermite quadrature is the reference integrator; because the
averaged state is linear in |psi><psi| the three integrals factorize and
each is a one-dimensional node sum.  Monte Carlo samples the joint
triple and must agree with quadrature within statistical error.

Gaussian truncation at t_j >= 0 is ignored: for x <= 0.05 the nominal
time sits at least 20 sigma from zero (tail mass < 1e-88).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import gates
from .protocol import (
    ALL_OUTCOMES,
    ATOM1,
    ATOM2,
    ATOM3,
    ATOM4,
    CHANNEL_ANGLE,
    MODE,
    PHASE_KICK_ANGLE,
    PROBE_ANGLE,
    BellOutcome,
    ProtocolParams,
    bob_correct,
    prepare_input,
    teleport_target,
)
from .qstate import (
    DensityMatrix,
    StateVector,
    SubsystemLayout,
    basis_state,
    embed,
    fidelity,
    level_index,
    partial_trace,
    tensor,
)

NOMINAL_ANGLES = (CHANNEL_ANGLE, PHASE_KICK_ANGLE, PROBE_ANGLE)

VACUUM = "vacuum"
TRACED = "traced"
CONVENTIONS = (VACUUM, TRACED)

CONVERGENCE_WARN_ATOL = 1e-8
TRUNCATION_X = 0.05


@dataclass(frozen=True)
class TimeNoiseModel:
    """Gaussian spreads for the three cavity-interaction durations."""

    x: float
    nominal_times: tuple[float, float, float]

    def __post_init__(self):
        if self.x < 0:
            raise ValueError("relative spread x must be >= 0")
        if self.x > TRUNCATION_X:
            warnings.warn(
                f"x = {self.x} is large enough that truncating the Gaussian at "
                "t >= 0 is no longer negligible; results ignore the truncation",
                stacklevel=2,
            )

    @classmethod
    def from_params(cls, params: ProtocolParams, x: float) -> "TimeNoiseModel":
        lam, chi = params.lam, params.chi
        return cls(x, (np.pi / (4 * lam), np.pi / chi, np.pi / (2 * lam)))

    @property
    def deltas(self) -> tuple[float, float, float]:
        return tuple(self.x * t for t in self.nominal_times)


def _full_layout(fock_cutoff: int) -> SubsystemLayout:
    return SubsystemLayout(
        [(ATOM1, 2), (ATOM2, 2), (ATOM3, 2), (ATOM4, 2), (MODE, fock_cutoff + 1)]
    )


def _initial_state(params: ProtocolParams) -> StateVector:
    """Input pair, atom 3 excited, probe in |g>, mode in vacuum, with the
    subsystems already in canonical label order."""
    inp = prepare_input(params.c0, params.c1)
    rest = basis_state(
        SubsystemLayout([(ATOM3, 2), (ATOM4, 2), (MODE, params.fock_cutoff + 1)]),
        {ATOM3: 1, ATOM4: 0, MODE: 0},
    )
    return tensor([inp, rest])


def _fixed_operators(params: ProtocolParams):
    layout = _full_layout(params.fock_cutoff)
    r1 = embed(gates.ramsey_unitary(), [ATOM1], layout)
    r4 = embed(gates.ramsey_unitary(), [ATOM4], layout)
    proj = {}
    for label in (ATOM1, ATOM4):
        for level in ("g", "e"):
            p = np.zeros((2, 2), dtype=complex)
            p[level_index(level), level_index(level)] = 1.0
            proj[(label, level)] = embed(p, [label], layout)
    return layout, r1, r4, proj


def _conjugate(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


@dataclass(frozen=True)
class AveragedState:
    """Noise-averaged conditional state with its record probability."""

    rho: DensityMatrix  # over (atom3, atom2, modeA), trace 1
    probability: float  # averaged detection-record probability
    method: str
    resolution: int  # quadrature order or Monte Carlo sample count
    batch_fidelity_inputs: Optional[tuple] = None  # MC batches for stderr


def _quadrature_joint(params: ProtocolParams, x: float, outcome: BellOutcome,
                      order: int) -> tuple[np.ndarray, float, SubsystemLayout]:
    if order < 5:
        raise ValueError("quadrature order must be >= 5")
    layout, r1, r4, proj = _fixed_operators(params)
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    weights = weights / np.sqrt(np.pi)
    l1, l4 = outcome.detection
    psi0 = _initial_state(params)
    rho = np.outer(psi0.amplitudes, psi0.amplitudes.conj())

    def average(rho, nominal, builder):
        acc = np.zeros_like(rho)
        for xi, w in zip(nodes, weights):
            angle = nominal * (1.0 + np.sqrt(2.0) * x * xi)
            acc += w * _conjugate(rho, builder(angle))
        return acc

    res3 = lambda a: embed(gates.resonant_unitary(a, params.fock_cutoff), [ATOM3, MODE], layout)
    disp = lambda a: embed(gates.dispersive_unitary(a, params.fock_cutoff), [ATOM1, MODE], layout)
    res4 = lambda a: embed(gates.resonant_unitary(a, params.fock_cutoff), [ATOM4, MODE], layout)

    rho = average(rho, NOMINAL_ANGLES[0], res3)
    rho = _conjugate(rho, r1)
    rho = average(rho, NOMINAL_ANGLES[1], disp)
    rho = _conjugate(rho, r1)
    p1 = proj[(ATOM1, l1)]
    rho = p1 @ rho @ p1
    rho = average(rho, NOMINAL_ANGLES[2], res4)
    rho = _conjugate(rho, r4)
    p4 = proj[(ATOM4, l4)]
    rho = p4 @ rho @ p4
    trace = float(np.trace(rho).real)
    return rho, trace, layout


def _montecarlo_joint(params: ProtocolParams, x: float, outcome: BellOutcome,
                      samples: int, rng: np.random.Generator,
                      n_batches: int = 20) -> tuple[np.ndarray, float, SubsystemLayout, list]:
    if samples < 10_000:
        raise ValueError("Monte Carlo needs at least 1e4 samples")
    layout, r1, r4, proj = _fixed_operators(params)
    l1, l4 = outcome.detection
    psi0 = _initial_state(params).amplitudes
    dims = layout.dims
    cutoff = params.fock_cutoff

    a = np.stack(
        [rng.normal(n, x * n if x > 0 else 0.0, size=samples) for n in NOMINAL_ANGLES]
    )

    def batch_resonant(angles: np.ndarray) -> np.ndarray:
        # (S, d, d) on atom (x) mode, same layout as gates.resonant_unitary
        nm = cutoff + 1
        d = 2 * nm
        u = np.tile(np.eye(d, dtype=complex), (angles.size, 1, 1))
        for n in range(cutoff):
            th = angles * np.sqrt(n + 1.0)
            ie, ig = nm + n, n + 1
            u[:, ie, ie] = np.cos(th)
            u[:, ig, ig] = np.cos(th)
            u[:, ig, ie] = -1j * np.sin(th)
            u[:, ie, ig] = -1j * np.sin(th)
        return u

    def batch_dispersive(angles: np.ndarray) -> np.ndarray:
        nm = cutoff + 1
        d = 2 * nm
        u = np.zeros((angles.size, d, d), dtype=complex)
        for n in range(nm):
            u[:, n, n] = 1.0
            u[:, nm + n, nm + n] = np.exp(-1j * angles * n)
        return u

    def apply_batch_local(psis: np.ndarray, us: np.ndarray, atom_label: str) -> np.ndarray:
        # act on (atom, mode) with per-sample matrices via tensor reshape
        axes = (layout.axis(atom_label), layout.axis(MODE))
        shaped = psis.reshape((samples,) + dims)
        shaped = np.moveaxis(shaped, [1 + axes[0], 1 + axes[1]], [-2, -1])
        lead = shaped.shape[1:-2]
        flat = shaped.reshape(samples, int(np.prod(lead)), -1)
        out = np.einsum("sij,skj->ski", us, flat)
        out = out.reshape((samples,) + lead + shaped.shape[-2:])
        out = np.moveaxis(out, [-2, -1], [1 + axes[0], 1 + axes[1]])
        return out.reshape(samples, layout.dim)

    psis = np.tile(psi0, (samples, 1))
    psis = apply_batch_local(psis, batch_resonant(a[0]), ATOM3)
    psis = psis @ r1.T
    psis = apply_batch_local(psis, batch_dispersive(a[1]), ATOM1)
    psis = psis @ r1.T
    psis = psis @ proj[(ATOM1, l1)].T
    psis = apply_batch_local(psis, batch_resonant(a[2]), ATOM4)
    psis = psis @ r4.T
    psis = psis @ proj[(ATOM4, l4)].T

    rho = np.einsum("si,sj->ij", psis, psis.conj()) / samples
    trace = float(np.trace(rho).real)

    # per-batch unnormalized sums for a standard error on the fidelity
    batch_edges = np.linspace(0, samples, n_batches + 1, dtype=int)
    batches = []
    for lo, hi in zip(batch_edges[:-1], batch_edges[1:]):
        chunk = psis[lo:hi]
        batches.append(np.einsum("si,sj->ij", chunk, chunk.conj()) / (hi - lo))
    return rho, trace, layout, batches


def _reduce_and_correct(rho_full: np.ndarray, trace: float, layout: SubsystemLayout,
                        outcome: BellOutcome) -> DensityMatrix:
    if trace <= 0:
        raise RuntimeError(f"record {outcome} has vanishing averaged probability")
    dm = DensityMatrix(layout, rho_full / trace)
    dm = bob_correct(outcome, dm)
    return partial_trace(dm, [ATOM3, ATOM2, MODE])


def averaged_joint_state(
    params: ProtocolParams,
    x: float,
    outcome: BellOutcome,
    *,
    method: str = "quadrature",
    order: int = 21,
    samples: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> AveragedState:
    """Noise-averaged conditional state over (atom3, atom2, mode)."""
    TimeNoiseModel.from_params(params, x)  # validates x, warns on truncation
    if method == "quadrature":
        rho, trace, layout = _quadrature_joint(params, x, outcome, order)
        dm = _reduce_and_correct(rho, trace, layout, outcome)
        return AveragedState(dm, trace, method, order)
    if method == "montecarlo":
        if rng is None:
            rng = np.random.default_rng(0)
        rho, trace, layout, batches = _montecarlo_joint(params, x, outcome, samples, rng)
        dm = _reduce_and_correct(rho, trace, layout, outcome)
        reduced_batches = tuple(
            _reduce_and_correct(b, float(np.trace(b).real), layout, outcome)
            for b in batches
        )
        return AveragedState(dm, trace, method, samples, reduced_batches)
    raise ValueError(f"unknown method {method!r}; expected 'quadrature' or 'montecarlo'")


def averaged_state(params: ProtocolParams, x: float, outcome: BellOutcome,
                   **kwargs) -> DensityMatrix:
    """Noise-averaged teleported state on atoms (3, 2), mode traced out."""
    joint = averaged_joint_state(params, x, outcome, **kwargs)
    return partial_trace(joint.rho, [ATOM3, ATOM2])


def _target_with_vacuum(params: ProtocolParams) -> StateVector:
    layout = SubsystemLayout([(ATOM3, 2), (ATOM2, 2), (MODE, params.fock_cutoff + 1)])
    amps = np.zeros(layout.dim, dtype=complex)
    amps[layout.flat_index({ATOM3: 0, ATOM2: 1, MODE: 0})] = params.c0
    amps[layout.flat_index({ATOM3: 1, ATOM2: 0, MODE: 0})] = params.c1
    return StateVector(layout, amps)


def _fidelity_of(dm: DensityMatrix, params: ProtocolParams, convention: str) -> float:
    if convention == VACUUM:
        return fidelity(dm, _target_with_vacuum(params))
    if convention == TRACED:
        return fidelity(partial_trace(dm, [ATOM3, ATOM2]), teleport_target(params.c0, params.c1))
    raise ValueError(f"unknown fidelity convention {convention!r}; expected one of {CONVENTIONS}")


@dataclass(frozen=True)
class FluctuationFidelity:
    value: float
    stderr: Optional[float]  # None for quadrature
    method: str
    resolution: int


def averaged_fidelity(
    params: ProtocolParams,
    x: float,
    outcome: BellOutcome,
    *,
    method: str = "quadrature",
    order: int = 21,
    samples: int = 100_000,
    rng: Optional[np.random.Generator] = None,
    convention: str = VACUUM,
    check_convergence: bool = False,
) -> FluctuationFidelity:
    """Fidelity of the noise-averaged conditional state with the target.

    With `check_convergence`, the quadrature result is recomputed at twice
    the order and a warning is raised if the two differ by more than 1e-8.
    """
    state = averaged_joint_state(
        params, x, outcome, method=method, order=order, samples=samples, rng=rng
    )
    value = _fidelity_of(state.rho, params, convention)
    stderr = None
    if method == "montecarlo":
        per_batch = np.array(
            [_fidelity_of(b, params, convention) for b in state.batch_fidelity_inputs]
        )
        stderr = float(per_batch.std(ddof=1) / np.sqrt(per_batch.size))
    elif check_convergence:
        finer = averaged_joint_state(params, x, outcome, method="quadrature", order=2 * order)
        if abs(_fidelity_of(finer.rho, params, convention) - value) > CONVERGENCE_WARN_ATOL:
            warnings.warn(
                f"quadrature not converged at order {order} for x = {x}",
                stacklevel=2,
            )
    return FluctuationFidelity(value, stderr, method, order if method == "quadrature" else samples)


def closed_form_fidelity(c0: float, x: float) -> float:
    """The closed-form fidelity F(c0, x) with its normalization N.

    Transcribed exactly as printed, with real c0 in [0, 1]:

        F = N^2 [ 1/2 c0^4 (e^{3u/2} + e^{u/2} + 2 e^{u}) e^{-3u/2}
                  + (1 - c0^2)(2 - 2 c0^2)
                  - 2 c0^2 (-e^{u/2} - 1 + c0^2 e^{u/2} + c0^2) e^{-3u/4} ]
        N = (sqrt(2 c0^2 e^{-u/2} + 3 - 2 c0^2 - e^{-u/2}))^{-1}

    with u = x^2 pi^2.
    """
    if not 0.0 <= c0 <= 1.0:
        raise ValueError("c0 must be a real coefficient in [0, 1]")
    if x < 0:
        raise ValueError("x must be >= 0")
    u = (x * np.pi) ** 2
    n_sq = 1.0 / (2 * c0**2 * np.exp(-u / 2) + 3 - 2 * c0**2 - np.exp(-u / 2))
    bracket = (
        0.5 * c0**4 * (np.exp(1.5 * u) + np.exp(0.5 * u) + 2 * np.exp(u)) * np.exp(-1.5 * u)
        + (1 - c0**2) * (2 - 2 * c0**2)
        - 2 * c0**2 * (-np.exp(0.5 * u) - 1 + c0**2 * np.exp(0.5 * u) + c0**2) * np.exp(-0.75 * u)
    )
    return float(n_sq * bracket)


@dataclass(frozen=True)
class SurfaceCell:
    c0: float
    x: float
    f_closed: float
    f_numeric: float
    delta: float
    flagged: bool


@dataclass(frozen=True)
class SurfaceTable:
    cells: tuple[SurfaceCell, ...]
    outcome: BellOutcome
    convention: str
    flag_threshold: float

    @property
    def flagged_cells(self) -> tuple[SurfaceCell, ...]:
        return tuple(c for c in self.cells if c.flagged)

    @property
    def max_delta(self) -> float:
        return max(c.delta for c in self.cells)


def fidelity_surface(
    c0_grid: Sequence[float],
    x_grid: Sequence[float],
    *,
    params: Optional[ProtocolParams] = None,
    outcome: BellOutcome = BellOutcome.PSI_PLUS,
    order: int = 21,
    convention: str = VACUUM,
    flag_threshold: float = 1e-3,
) -> SurfaceTable:
    """Closed-form and numeric fidelities over a (c0, x) grid.

    Cells where the two disagree beyond the threshold are flagged, never
    silently reconciled.
    """
    base = params if params is not None else ProtocolParams()
    cells = []
    for c0 in c0_grid:
        c0 = float(c0)
        p = base.with_coefficients(c0, np.sqrt(max(0.0, 1 - c0**2)))
        for x in x_grid:
            x = float(x)
            fc = closed_form_fidelity(c0, x)
            fn = averaged_fidelity(
                p, x, outcome, method="quadrature", order=order, convention=convention
            ).value
            delta = abs(fc - fn)
            cells.append(SurfaceCell(c0, x, fc, fn, delta, delta > flag_threshold))
    return SurfaceTable(tuple(cells), outcome, convention, flag_threshold)


@dataclass(frozen=True)
class BranchMatch:
    outcome: BellOutcome
    convention: str
    max_delta: float
    matches: bool


@dataclass(frozen=True)
class BranchMatchReport:
    """Which detection branches the closed form corresponds to."""

    entries: tuple[BranchMatch, ...]
    threshold: float

    def named_branches(self, convention: str = VACUUM) -> tuple[BellOutcome, ...]:
        hits = [e for e in self.entries if e.convention == convention and e.matches]
        return tuple(e.outcome for e in sorted(hits, key=lambda e: e.max_delta))

    @property
    def text(self) -> str:
        lines = [f"closed form vs quadrature, max |dF| over the grid (threshold {self.threshold:g}):"]
        for e in self.entries:
            mark = "match" if e.matches else "no match"
            lines.append(
                f"  {e.outcome.value:5s} convention={e.convention:7s} "
                f"max|dF| = {e.max_delta:.3e}  [{mark}]"
            )
        named = self.named_branches(VACUUM)
        if named:
            lines.append(
                "the closed form corresponds to branch "
                + ", ".join(o.value for o in named)
                + " under the vacuum-mode fidelity convention "
                "(best match first; the mode-traced convention deviates at "
                "second order in (x pi)^2)."
            )
        else:
            lines.append("no branch reproduces the closed form within the threshold.")
        return "\n".join(lines)


def branch_match_report(
    c0_grid: Sequence[float],
    x_grid: Sequence[float],
    *,
    params: Optional[ProtocolParams] = None,
    order: int = 21,
    threshold: float = 1e-3,
) -> BranchMatchReport:
    """Compare every detection branch, under both fidelity conventions,
    against the closed form on a (c0, x) grid."""
    base = params if params is not None else ProtocolParams()
    entries = []
    for outcome in ALL_OUTCOMES:
        for convention in CONVENTIONS:
            worst = 0.0
            for c0 in c0_grid:
                c0 = float(c0)
                p = base.with_coefficients(c0, np.sqrt(max(0.0, 1 - c0**2)))
                for x in x_grid:
                    fn = averaged_fidelity(
                        p, float(x), outcome, method="quadrature",
                        order=order, convention=convention,
                    ).value
                    worst = max(worst, abs(fn - closed_form_fidelity(c0, float(x))))
            entries.append(BranchMatch(outcome, convention, worst, worst <= threshold))
    return BranchMatchReport(tuple(entries), threshold)

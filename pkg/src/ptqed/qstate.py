"""Composite-register linear algebra for small labeled Hilbert spaces.

States live on an ordered list of labeled subsystems (two-level atoms and
one bosonic mode with a Fock cutoff).  Amplitudes are indexed mixed-radix
in layout order, with atom basis g=0, e=1 and the mode indexed by photon
number.  Everything is dense; the protocol register tops out at dimension
32 for the default cutoff, so transparency beats cleverness here.

All values are immutable after construction (arrays are frozen), and all
operations are pure functions, so states can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

NORM_ATOL = 1e-10
HERM_ATOL = 1e-10
EIG_ATOL = 1e-9

GROUND = 0
EXCITED = 1

_LEVELS = {"g": GROUND, "e": EXCITED, GROUND: GROUND, EXCITED: EXCITED}


class LayoutError(ValueError):
    """Duplicate, unknown, or incompatible subsystem labels."""


class ShapeError(ValueError):
    """Operator or state dimensions inconsistent with a layout."""


class InvariantViolation(RuntimeError):
    """A runtime physicality check failed; carries the property name."""

    def __init__(self, prop: str, detail: str = ""):
        self.prop = prop
        super().__init__(f"invariant violated: {prop}" + (f" ({detail})" if detail else ""))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.flags.writeable = False
    return a


def level_index(level: Union[str, int]) -> int:
    """Map 'g'/'e' (or 0/1) to the atomic basis index."""
    try:
        return _LEVELS[level]
    except KeyError:
        raise ValueError(f"unknown atomic level {level!r}; expected 'g' or 'e'") from None


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered labeled subsystems with local dimensions.

    The canonical protocol layout is atom1(2), atom2(2), atom3(2),
    atom4(2), modeA(fock_cutoff+1), but any unique labeling works.
    """

    entries: tuple[tuple[str, int], ...]

    def __init__(self, entries: Iterable[tuple[str, int]]):
        entries = tuple((str(l), int(d)) for l, d in entries)
        labels = [l for l, _ in entries]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate subsystem labels in {labels}")
        if any(d < 1 for _, d in entries):
            raise LayoutError("all subsystem dimensions must be >= 1")
        object.__setattr__(self, "entries", entries)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.entries)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.entries)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims)) if self.entries else 1

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem label {label!r}; have {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        overlap = set(self.labels) & set(other.labels)
        if overlap:
            raise LayoutError(f"layout conflict: labels {sorted(overlap)} appear on both sides")
        return SubsystemLayout(self.entries + other.entries)

    def select(self, labels: Sequence[str]) -> "SubsystemLayout":
        return SubsystemLayout((l, self.dim_of(l)) for l in labels)

    def flat_index(self, assignment: dict[str, int]) -> int:
        """Flat index of a basis state given a full {label: local index} map."""
        if set(assignment) != set(self.labels):
            raise LayoutError("assignment must cover exactly the layout labels")
        idx = 0
        for label, d in self.entries:
            k = assignment[label]
            if not 0 <= k < d:
                raise ShapeError(f"basis index {k} out of range for {label!r} (dim {d})")
            idx = idx * d + k
        return idx


@dataclass(frozen=True)
class StateVector:
    """Pure state: complex amplitudes over a layout, mixed-radix indexed."""

    layout: SubsystemLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _freeze(np.asarray(self.amplitudes).ravel())
        if amps.size != self.layout.dim:
            raise ShapeError(f"amplitude length {amps.size} != layout dimension {self.layout.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise InvariantViolation("state-norm", "cannot normalize the zero vector")
        return StateVector(self.layout, self.amplitudes / n)

    def check_normalized(self) -> "StateVector":
        if abs(self.norm**2 - 1.0) > NORM_ATOL:
            raise InvariantViolation("state-norm", f"norm^2 = {self.norm**2}")
        return self

    def amplitude(self, assignment: dict[str, int]) -> complex:
        return complex(self.amplitudes[self.layout.flat_index(assignment)])

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "StateVector") -> complex:
        if self.layout != other.layout:
            raise LayoutError("overlap requires identical layouts")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state: Hermitian, unit-trace, PSD matrix over a layout."""

    layout: SubsystemLayout
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _freeze(np.asarray(self.matrix))
        d = self.layout.dim
        if m.shape != (d, d):
            raise ShapeError(f"matrix shape {m.shape} != ({d}, {d})")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def check_physical(self) -> "DensityMatrix":
        """Verify hermiticity, unit trace, and positivity within tolerances."""
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > HERM_ATOL:
            raise InvariantViolation("density-hermitian")
        if abs(self.trace - 1.0) > NORM_ATOL:
            raise InvariantViolation("density-trace", f"trace = {self.trace}")
        smallest = float(np.linalg.eigvalsh(m)[0])
        if smallest < -EIG_ATOL:
            raise InvariantViolation("density-positive", f"min eigenvalue = {smallest}")
        return self


def basis_state(layout: SubsystemLayout, assignment: dict[str, int]) -> StateVector:
    """Computational basis state |assignment> on the given layout."""
    amps = np.zeros(layout.dim, dtype=complex)
    amps[layout.flat_index(assignment)] = 1.0
    return StateVector(layout, amps)


def atom_state(label: str, amplitudes: Sequence[complex]) -> StateVector:
    """Single two-level atom (g, e) as a one-entry register."""
    return StateVector(SubsystemLayout([(label, 2)]), np.asarray(amplitudes, dtype=complex))


def mode_state(label: str, amplitudes: Sequence[complex]) -> StateVector:
    """Single bosonic mode with len(amplitudes) Fock levels."""
    amps = np.asarray(amplitudes, dtype=complex)
    return StateVector(SubsystemLayout([(label, amps.size)]), amps)


def tensor(factors: Sequence[StateVector]) -> StateVector:
    """Tensor product of states on disjoint layouts.

    The returned layout is the concatenation of the factor layouts, and
    each composite amplitude is the product of the factor amplitudes.
    """
    if not factors:
        raise ValueError("tensor requires at least one factor")
    layout = factors[0].layout
    amps = factors[0].amplitudes
    for f in factors[1:]:
        layout = layout.concat(f.layout)
        amps = np.kron(amps, f.amplitudes)
    return StateVector(layout, amps)


def embed(op: np.ndarray, targets: Sequence[str], layout: SubsystemLayout) -> np.ndarray:
    """Lift a local operator to the full space of `layout`.

    `op` acts on the tensor product of the target subsystems in the order
    given; identity everywhere else.  The result is a dense full-dimension
    matrix consistent with the layout's mixed-radix index order.
    """
    op = np.asarray(op, dtype=complex)
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise LayoutError(f"duplicate target labels {targets}")
    target_axes = [layout.axis(l) for l in targets]
    dims = layout.dims
    dt = int(np.prod([dims[a] for a in target_axes])) if targets else 1
    if op.shape != (dt, dt):
        raise ShapeError(f"operator shape {op.shape} != ({dt}, {dt}) for targets {targets}")
    rest_axes = [a for a in range(len(dims)) if a not in target_axes]
    dr = int(np.prod([dims[a] for a in rest_axes])) if rest_axes else 1
    full = np.kron(op, np.eye(dr, dtype=complex))
    # kron order is (targets..., rest...); permute both row and column
    # multi-indices back to layout order.
    order = target_axes + rest_axes
    shaped = full.reshape([dims[a] for a in order] * 2)
    inv = np.argsort(order)
    n = len(dims)
    shaped = shaped.transpose(list(inv) + [n + i for i in inv])
    return np.ascontiguousarray(shaped.reshape(layout.dim, layout.dim))


def apply_operator(state: Union[StateVector, DensityMatrix], op: np.ndarray,
                   targets: Sequence[str]) -> Union[StateVector, DensityMatrix]:
    """Apply a local unitary to a state (U psi, or U rho U^dagger)."""
    full = embed(op, targets, state.layout)
    if isinstance(state, StateVector):
        return StateVector(state.layout, full @ state.amplitudes)
    return DensityMatrix(state.layout, full @ state.matrix @ full.conj().T)


def apply_kraus(rho: DensityMatrix, kraus: Sequence[np.ndarray],
                targets: Sequence[str]) -> DensityMatrix:
    """Apply an operator-sum channel sum_k E_k rho E_k^dagger locally."""
    out = np.zeros_like(rho.matrix)
    for k in kraus:
        full = embed(k, targets, rho.layout)
        out = out + full @ rho.matrix @ full.conj().T
    return DensityMatrix(rho.layout, out)


def partial_trace(rho: DensityMatrix, keep: Sequence[str]) -> DensityMatrix:
    """Trace out every subsystem not in `keep`.

    The result's layout follows the order of `keep`; tracing preserves the
    trace and hermiticity exactly (up to float addition).
    """
    keep = list(keep)
    if not keep:
        raise LayoutError("keep must name at least one subsystem")
    keep_axes = [rho.layout.axis(l) for l in keep]
    dims = rho.layout.dims
    n = len(dims)
    t = rho.matrix.reshape(dims * 2)
    # contract row/col axes of every traced subsystem
    traced = sorted(set(range(n)) - set(keep_axes), reverse=True)
    for a in traced:
        t = np.trace(t, axis1=a, axis2=a + t.ndim // 2)
    remaining = [a for a in range(n) if a not in traced]  # ascending layout order
    perm = [remaining.index(a) for a in keep_axes]
    m = len(remaining)
    t = t.transpose(perm + [m + p for p in perm])
    dk = int(np.prod([dims[a] for a in keep_axes]))
    return DensityMatrix(rho.layout.select(keep), t.reshape(dk, dk))


def _projector(layout: SubsystemLayout, label: str, level: Union[str, int]) -> np.ndarray:
    d = layout.dim_of(label)
    if d != 2:
        raise LayoutError(f"detection is defined for two-level atoms; {label!r} has dimension {d}")
    p = np.zeros((2, 2), dtype=complex)
    p[level_index(level), level_index(level)] = 1.0
    return embed(p, [label], layout)


def project_and_condition(
    state: Union[StateVector, DensityMatrix], label: str, level: Union[str, int]
) -> tuple[float, Union[StateVector, DensityMatrix, None]]:
    """Project an atom onto g or e and renormalize.

    Returns (probability, conditioned state).  A probability consistent
    with zero yields (0.0, None) rather than dividing by zero.
    """
    proj = _projector(state.layout, label, level)
    if isinstance(state, StateVector):
        projected = proj @ state.amplitudes
        p = float(np.real(np.vdot(projected, projected)))
        if p <= NORM_ATOL**2:
            return 0.0, None
        return p, StateVector(state.layout, projected / np.sqrt(p))
    projected = proj @ state.matrix @ proj
    p = float(np.trace(projected).real)
    if p <= NORM_ATOL**2:
        return 0.0, None
    return p, DensityMatrix(state.layout, projected / p)


def detection_probabilities(state: Union[StateVector, DensityMatrix], label: str) -> dict[str, float]:
    """Born probabilities for detecting the atom in g and in e."""
    out = {}
    for level in ("g", "e"):
        proj = _projector(state.layout, label, level)
        if isinstance(state, StateVector):
            v = proj @ state.amplitudes
            out[level] = float(np.real(np.vdot(v, v)))
        else:
            out[level] = float(np.trace(proj @ state.matrix).real)
    return out


def fidelity(state: Union[StateVector, DensityMatrix], target: StateVector) -> float:
    """<target| rho |target> (or |<target|psi>|^2), clamped to [0, 1]."""
    if state.layout != target.layout:
        raise LayoutError("fidelity requires identical layouts")
    t = target.amplitudes
    if isinstance(state, StateVector):
        val = abs(np.vdot(t, state.amplitudes)) ** 2
    else:
        val = float(np.real(np.vdot(t, state.matrix @ t)))
    if val < -NORM_ATOL or val > 1.0 + NORM_ATOL:
        raise InvariantViolation("fidelity-range", f"raw value {val}")
    return float(min(1.0, max(0.0, val)))


def states_equal_up_to_phase(a: StateVector, b: StateVector, atol: float = 1e-12) -> bool:
    """Whether two normalized pure states coincide up to a global phase."""
    return abs(abs(a.overlap(b)) - 1.0) <= atol

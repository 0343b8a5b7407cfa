"""The four primitive evolutions of the protocol as explicit unitaries.

Conventions (fixed once, used everywhere):

* resonant Jaynes-Cummings pulse, angle a = (coupling) x (time):
  within each excitation block {|e,n>, |g,n+1>}
      |e,n>   -> cos(a sqrt(n+1)) |e,n>   - i sin(a sqrt(n+1)) |g,n+1>
      |g,n+1> -> cos(a sqrt(n+1)) |g,n+1> - i sin(a sqrt(n+1)) |e,n>
  and |g,0> is fixed.  The -i on the swapped component pins the channel
  state (|e,0> - i|g,1>)/sqrt(2) at a = pi/4.

* dispersive pulse, angle b = (shift) x (time): photon-number-dependent
  phase on the excited state only, |e,n> -> exp(-i b n) |e,n>; at b = pi
  this flips the sign of |e,1> exactly.

* Ramsey rotation: |e> -> (|g>+|e>)/sqrt(2), |g> -> (|g>-|e>)/sqrt(2).

* Pauli corrections in the (g, e) basis: z = diag(1,-1); x swaps;
  y maps |g> -> i|e>, |e> -> -i|g> (so the correction table restores the
  target up to a global phase).

Atom-and-mode operators are returned on the product space atom (x) mode,
atom axis first, mode indexed by photon number up to the Fock cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import InvariantViolation, SubsystemLayout, embed

UNITARITY_ATOL = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class GateSpec:
    """A primitive gate: kind, target labels, and (where used) an angle.

    resonant/dispersive target exactly (atom, mode); ramsey and the Pauli
    corrections target exactly one atom.  `angle` is coupling x time for
    the resonant pulse and shift x time for the dispersive one.
    """

    kind: str
    targets: tuple[str, ...]
    angle: float = 0.0

    _KINDS = ("resonant", "dispersive", "ramsey", "pauli_x", "pauli_y", "pauli_z")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        n = len(self.targets)
        if self.kind in ("resonant", "dispersive") and n != 2:
            raise ValueError(f"{self.kind} gate targets exactly (atom, mode); got {self.targets}")
        if self.kind in ("ramsey", "pauli_x", "pauli_y", "pauli_z") and n != 1:
            raise ValueError(f"{self.kind} gate targets exactly one atom; got {self.targets}")


def resonant_unitary(angle: float, fock_cutoff: int = 1) -> np.ndarray:
    """Resonant atom-mode exchange pulse on atom (x) mode."""
    nmodes = fock_cutoff + 1
    u = np.eye(2 * nmodes, dtype=complex)

    def idx(a: int, n: int) -> int:
        return a * nmodes + n

    for n in range(fock_cutoff):
        th = angle * np.sqrt(n + 1.0)
        ie, ig = idx(1, n), idx(0, n + 1)
        u[ie, ie] = np.cos(th)
        u[ig, ig] = np.cos(th)
        u[ig, ie] = -1j * np.sin(th)
        u[ie, ig] = -1j * np.sin(th)
    return u


def dispersive_unitary(angle: float, fock_cutoff: int = 1) -> np.ndarray:
    """Photon-number-dependent phase on the excited state, diagonal."""
    nmodes = fock_cutoff + 1
    diag = np.ones(2 * nmodes, dtype=complex)
    for n in range(nmodes):
        diag[nmodes + n] = np.exp(-1j * angle * n)
    return np.diag(diag)


def ramsey_unitary() -> np.ndarray:
    """Fixed single-atom rotation used by both Ramsey zones."""
    return np.array([[1, 1], [-1, 1]], dtype=complex) / np.sqrt(2.0)


def pauli(which: str) -> np.ndarray:
    """Single-atom Pauli operator, basis (g, e)."""
    try:
        return {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}[which]
    except KeyError:
        raise ValueError(f"unknown Pauli {which!r}; expected 'x', 'y' or 'z'") from None


def build(spec: GateSpec, layout: SubsystemLayout) -> np.ndarray:
    """Materialize a GateSpec as a full-space unitary on `layout`."""
    if spec.kind == "resonant":
        cutoff = layout.dim_of(spec.targets[1]) - 1
        local = resonant_unitary(spec.angle, cutoff)
    elif spec.kind == "dispersive":
        cutoff = layout.dim_of(spec.targets[1]) - 1
        local = dispersive_unitary(spec.angle, cutoff)
    elif spec.kind == "ramsey":
        local = ramsey_unitary()
    else:
        local = pauli(spec.kind[-1])
    full = embed(local, spec.targets, layout)
    check_unitary(full)
    return full


def check_unitary(u: np.ndarray, atol: float = UNITARITY_ATOL) -> None:
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > atol:
        raise InvariantViolation("gate-unitarity", f"max |U^dag U - I| = {dev}")

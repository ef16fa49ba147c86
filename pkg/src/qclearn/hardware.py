"""Neutral-atom register model: interaction drift and laser control operators.

Units: distances in micrometers, energies in kHz, times in ms, so products
like ``c6 / r**6 * tau`` are dimensionless phases.

Control channels come in two kinds per addressed atom, each decomposed into
``K = 2`` weighted unitaries (the form measurable term by term on hardware):

* ``coupling``:  Q = |0><1|, so ``z (Q + Q^+) = z X``; the channel value is
  the half Rabi frequency, ``z = Omega / 2``, at laser phase zero.
* ``detuning``:  Q = |1><1|, so ``z (Q + Q^+) = 2 z |1><1|``; against the
  laser term ``-Delta |1><1|`` this means ``z = -Delta / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linalg import I2, PAULI_X, PAULI_Y, PAULI_Z, embed_one_qubit

__all__ = [
    "AtomGeometry",
    "pair_geometry",
    "triangle_geometry",
    "chain_geometry",
    "drift_hamiltonian",
    "ControlOperator",
    "control_operators",
    "control_hamiltonian",
]

DEFAULT_C6 = 0.422  # kHz * um^6, nearest-neighbour V = 0.422 kHz at 1 um
WEAK_C6 = 0.07  # kHz * um^6, weak-interaction variant


@dataclass
class AtomGeometry:
    """Atom positions (um) with interaction constants (kHz um^6 / kHz um^3)."""

    positions: np.ndarray
    c6: float = DEFAULT_C6
    c3: float = 0.0
    interaction: str = "vdw"  # "vdw" | "dipole"

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if self.interaction not in ("vdw", "dipole"):
            raise ValueError(f"unknown interaction kind {self.interaction!r}")
        n = self.n_atoms
        for i in range(n):
            for j in range(i + 1, n):
                if np.linalg.norm(self.positions[i] - self.positions[j]) < 1e-9:
                    raise ValueError("atoms must sit at distinct positions")

    @property
    def n_atoms(self):
        return self.positions.shape[0]


def pair_geometry(spacing=1.0, **kwargs):
    return AtomGeometry(positions=[[0.0, 0.0], [spacing, 0.0]], **kwargs)


def triangle_geometry(spacing=1.0, **kwargs):
    """Equilateral triangle, every pair at distance ``spacing``."""
    h = spacing * np.sqrt(3.0) / 2.0
    return AtomGeometry(positions=[[0.0, 0.0], [spacing, 0.0], [spacing / 2.0, h]], **kwargs)


def chain_geometry(n_atoms, spacing=1.0, **kwargs):
    """Evenly spaced line of atoms (nearest neighbours at ``spacing``)."""
    if n_atoms < 1:
        raise ValueError("need at least one atom")
    return AtomGeometry(positions=[[i * spacing, 0.0] for i in range(n_atoms)], **kwargs)


def drift_hamiltonian(geom):
    """Always-on interaction Hamiltonian of the register.

    Van der Waals: ``sum_{i<j} c6 / r_ij^6 |11><11|_ij`` (diagonal).
    Dipole: ``sum_{i<j} c3 / r_ij^3 (|01><10| + |10><01|)_ij`` (flip-flop).
    """
    n = geom.n_atoms
    dim = 2**n
    if geom.interaction == "vdw":
        diag = np.zeros(dim)
        for i in range(n):
            for j in range(i + 1, n):
                r = np.linalg.norm(geom.positions[i] - geom.positions[j])
                v = geom.c6 / r**6
                bit_i, bit_j = n - 1 - i, n - 1 - j  # qubit 0 most significant
                for idx in range(dim):
                    if (idx >> bit_i) & 1 and (idx >> bit_j) & 1:
                        diag[idx] += v
        return np.diag(diag).astype(complex)

    h = np.zeros((dim, dim), dtype=complex)
    sp = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |1><0|
    for i in range(n):
        for j in range(i + 1, n):
            r = np.linalg.norm(geom.positions[i] - geom.positions[j])
            v = geom.c3 / r**3
            factors_up = [I2] * n
            factors_up[i] = sp.conj().T  # |0><1| on atom i
            factors_up[j] = sp  # |1><0| on atom j
            term = linalg.kron_all(factors_up)
            h += v * (term + term.conj().T)
    return h


@dataclass
class ControlOperator:
    """One laser control channel ``z (Q + Q^+)`` with its unitary decomposition.

    ``parts`` is a list of ``(coefficient, unitary)`` pairs summing to ``Q``;
    ``b`` caches the Hermitian direction ``Q + Q^+``.
    """

    qubit: int
    kind: str
    matrix: np.ndarray
    parts: list
    b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        recomposed = sum(coeff * unitary for coeff, unitary in self.parts)
        if np.abs(recomposed - self.matrix).max() > 1e-12:
            raise ValueError("unitary parts do not recompose the control operator")
        for _, unitary in self.parts:
            if not linalg.is_unitary(unitary, tol=1e-12):
                raise ValueError("control operator parts must be unitary")
        self.b = self.matrix + self.matrix.conj().T


def _coupling_operator(qubit, n_qubits):
    sm = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
    q = embed_one_qubit(sm, qubit, n_qubits)
    parts = [
        (0.5, embed_one_qubit(PAULI_X, qubit, n_qubits)),
        (0.5j, embed_one_qubit(PAULI_Y, qubit, n_qubits)),
    ]
    return ControlOperator(qubit=qubit, kind="coupling", matrix=q, parts=parts)


def _detuning_operator(qubit, n_qubits):
    p1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)  # |1><1|
    q = embed_one_qubit(p1, qubit, n_qubits)
    parts = [
        (0.5, np.eye(2**n_qubits, dtype=complex)),
        (-0.5, embed_one_qubit(PAULI_Z, qubit, n_qubits)),
    ]
    return ControlOperator(qubit=qubit, kind="detuning", matrix=q, parts=parts)


def control_operators(n_qubits, control="rotational"):
    """Per-atom control channels; ``rotational`` means coupling plus detuning."""
    ops = []
    if control in ("coupling", "rotational"):
        ops.extend(_coupling_operator(q, n_qubits) for q in range(n_qubits))
    if control in ("detuning", "rotational"):
        ops.extend(_detuning_operator(q, n_qubits) for q in range(n_qubits))
    if control not in ("coupling", "detuning", "rotational"):
        raise ValueError(f"unknown control family {control!r}")
    return ops


def control_hamiltonian(ops, values):
    """``sum_r z_r (Q_r + Q_r^+)`` for real channel values ``z``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(ops),):
        raise ValueError(f"expected {len(ops)} channel values, got shape {values.shape}")
    dim = ops[0].matrix.shape[0]
    h = np.zeros((dim, dim), dtype=complex)
    for op, z in zip(ops, values):
        h += z * op.b
    return h

"""Parametrized dilation unitaries: layered gate circuits and piecewise-constant pulses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import herm_propagator, kron_all

__all__ = [
    "entangling_gate",
    "GateAnsatz",
    "init_gate_params",
    "rz",
    "rx",
    "gate_unitary",
    "PulseSchedule",
    "zero_schedule",
    "segment_hamiltonians",
    "pulse_segment_unitaries",
    "pulse_propagate",
    "split_compose",
]


def rz(theta):
    return np.array([[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=complex)


def rx(theta):
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def entangling_gate(h_v, tau_v):
    """Entangler generated by letting the drift Hamiltonian act for ``tau_v``."""
    return herm_propagator(h_v, tau_v)


@dataclass
class GateAnsatz:
    """Depth-``d`` layered circuit on ``n_qubits``: per-qubit ZXZ rotations, then the entangler.

    Blocks are applied in order (block 1 acts first).  ``tau_g``/``tau_v`` are
    the wall-clock costs (ms) of one rotation layer and one entangler, so the
    physical evolution time is ``depth * (tau_g + tau_v)``.
    """

    n_qubits: int
    depth: int
    u_ent: np.ndarray
    tau_g: float = 1.0
    tau_v: float = 10.0

    def __post_init__(self):
        self.u_ent = np.asarray(self.u_ent, dtype=complex)
        dim = 2**self.n_qubits
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.u_ent.shape != (dim, dim):
            raise ValueError("entangler dimension does not match the qubit count")
        if not linalg.is_unitary(self.u_ent, tol=1e-10):
            raise ValueError("entangler must be unitary")

    @property
    def n_params(self):
        return 3 * self.depth * self.n_qubits

    @property
    def total_time(self):
        return self.depth * (self.tau_g + self.tau_v)


def init_gate_params(ansatz, seed, scale=0.1):
    """Initial rotation angles drawn uniformly from ``[-scale, scale]``."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.uniform(-scale, scale, size=ansatz.n_params)


def gate_unitary(ansatz, theta):
    """Assemble the circuit unitary from the flat parameter vector.

    ``theta`` reshapes to ``(depth, n_qubits, 3)``; per qubit the rotation is
    ``Rz(t3) Rx(t2) Rz(t1)`` (the ``t1`` rotation acts first).
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ansatz.n_params,):
        raise ValueError(f"expected {ansatz.n_params} parameters, got shape {theta.shape}")
    angles = theta.reshape(ansatz.depth, ansatz.n_qubits, 3)
    dim = 2**ansatz.n_qubits
    u = np.eye(dim, dtype=complex)
    for block in range(ansatz.depth):
        singles = [
            rz(angles[block, q, 2]) @ rx(angles[block, q, 1]) @ rz(angles[block, q, 0])
            for q in range(ansatz.n_qubits)
        ]
        u = ansatz.u_ent @ kron_all(singles) @ u
    return u


@dataclass
class PulseSchedule:
    """Piecewise-constant control values, shape (n_channels, n_segments), over ``tau_f``."""

    values: np.ndarray
    tau_f: float

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.tau_f <= 0:
            raise ValueError("tau_f must be positive")
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError("schedule values must form a non-empty 2-d array")

    @property
    def n_channels(self):
        return self.values.shape[0]

    @property
    def n_segments(self):
        return self.values.shape[1]

    @property
    def dtau(self):
        return self.tau_f / self.n_segments


def zero_schedule(n_channels, n_segments, tau_f):
    """All-zero schedule (the conventional optimization start point)."""
    return PulseSchedule(values=np.zeros((n_channels, n_segments)), tau_f=tau_f)


def segment_hamiltonians(h_v, ops, sched):
    """Constant Hamiltonian of every segment: drift plus active controls."""
    if len(ops) != sched.n_channels:
        raise ValueError("schedule channel count does not match the control operators")
    hs = []
    for j in range(sched.n_segments):
        h = np.array(h_v, dtype=complex, copy=True)
        for r, op in enumerate(ops):
            h += sched.values[r, j] * op.b
        hs.append(h)
    return hs


def pulse_segment_unitaries(h_v, ops, sched):
    return [herm_propagator(h, sched.dtau) for h in segment_hamiltonians(h_v, ops, sched)]


def pulse_propagate(h_v, ops, sched, upto=None):
    """Propagator of the controlled Schroedinger equation after ``upto`` segments.

    ``upto = None`` gives the full final-time unitary; segment 1 acts first,
    so ``pulse_propagate(.., upto=N) == u_N @ ... @ u_1``.
    """
    n = sched.n_segments if upto is None else upto
    if not 0 <= n <= sched.n_segments:
        raise ValueError("upto must lie in [0, n_segments]")
    dim = h_v.shape[0]
    u = np.eye(dim, dtype=complex)
    for u_seg in pulse_segment_unitaries(h_v, ops, sched)[:n]:
        u = u_seg @ u
    return u


def split_compose(u_h, u_dec, dim_b):
    """Total dilation ``u_dec (u_h x I_B)`` of the split (coherent/dissipative) form."""
    return np.asarray(u_dec) @ linalg.kron(np.asarray(u_h), np.eye(dim_b))

"""Distance measures, measurement bases and evaluation curves."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import channel as channel_mod
from . import linalg
from .linalg import SINGLE_PAULIS, kron_all

__all__ = [
    "bures_distance",
    "pauli_labels",
    "pauli_strings",
    "expectation",
    "ErrorCurve",
    "error_curve",
]

SQRT2 = float(np.sqrt(2.0))


def bures_distance(rho, sigma, squared=False):
    """Bures distance ``sqrt(2 (1 - sqrt(F)))`` between two density matrices.

    ``sqrt(F) = Tr[(sqrt(rho) sigma sqrt(rho))^(1/2)]``.  Round-off is clamped
    so the result always lies in ``[0, sqrt(2)]`` (squared: ``[0, 2]``).
    Inputs may be very slightly indefinite (e.g. extrapolated states); their
    negative round-off eigenvalues are clamped by the PSD square root.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError("states must have matching dimensions")
    s = linalg.psd_sqrt(rho, tol=1e-8)
    root_fid = np.trace(linalg.psd_sqrt(s @ sigma @ s, tol=1e-8)).real
    d2 = 2.0 * (1.0 - min(root_fid, 1.0))
    d2 = min(max(d2, 0.0), 2.0)
    return d2 if squared else float(np.sqrt(d2))


def pauli_labels(n_qubits):
    """All ``4**n`` Pauli-string labels in lexicographic order, qubit 0 leftmost."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits)]


def pauli_strings(n_qubits):
    """The matrices matching :func:`pauli_labels` order."""
    return [kron_all([SINGLE_PAULIS[c] for c in label]) for label in pauli_labels(n_qubits)]


def expectation(rho, obs):
    """Real expectation value ``Tr[obs rho]``; rejects non-negligible imaginary residue."""
    val = np.trace(np.asarray(obs) @ np.asarray(rho))
    if abs(val.imag) >= 1e-10:
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


@dataclass
class ErrorCurve:
    """Per-step distance statistics between exact and learned evolution."""

    steps: np.ndarray  # (n_steps,)
    mean: np.ndarray
    min: np.ndarray
    max: np.ndarray
    per_state: np.ndarray  # (n_states, n_steps)


def error_curve(exact_step, learned, states, n_steps, squared=False):
    """Distance between exact and learned evolution over ``1..n_steps`` steps.

    Parameters
    ----------
    exact_step : numpy.ndarray
        One-step superoperator of the target evolution on column-stacked
        states (``expm(L dt)``).
    learned : StinespringChannel
        The learned channel, iterated the same number of steps.
    states : sequence of density matrices
        Evaluation initial states.
    n_steps : int
        Number of extrapolation steps.
    squared : bool
        Report the squared Bures distance instead of the distance.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    dim = learned.dim_a
    per_state = np.empty((len(states), n_steps))
    for s_idx, rho0 in enumerate(states):
        rho0 = np.asarray(rho0, dtype=complex)
        approx = channel_mod.extrapolate(learned, rho0, n_steps)
        v = linalg.vec(rho0)
        for n in range(n_steps):
            v = exact_step @ v
            exact = linalg.unvec(v, dim)
            exact = 0.5 * (exact + exact.conj().T)
            per_state[s_idx, n] = bures_distance(exact, approx[n], squared=squared)
    return ErrorCurve(
        steps=np.arange(1, n_steps + 1),
        mean=per_state.mean(axis=0),
        min=per_state.min(axis=0),
        max=per_state.max(axis=0),
        per_state=per_state,
    )

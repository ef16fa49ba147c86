"""Quantum channels defined by a unitary on system plus fresh ancillas.

A channel is stored as the dilation unitary ``u`` on the joint register
(system factor first, ancilla factor second).  Its action is

    apply(rho) = Tr_B[ u (rho x |0..0><0..0|_B) u^+ ]

Repeated application models evolution over discrete time steps; every step
attaches a *fresh* ancilla register in the ground state, and the channel
keeps a running count of how many registers it has consumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linalg import dag

__all__ = [
    "StinespringChannel",
    "kraus_from_unitary",
    "kraus_operators",
    "apply",
    "superoperator",
    "extrapolate",
    "choi_matrix",
    "is_completely_positive",
    "is_trace_preserving",
]


@dataclass
class StinespringChannel:
    """Dilation unitary with its system/ancilla factor dimensions."""

    u: np.ndarray
    dim_a: int
    dim_b: int
    unitarity_tol: float = 1e-10
    ancillas_consumed: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        n = self.dim_a * self.dim_b
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("factor dimensions must be positive")
        if self.u.shape != (n, n):
            raise ValueError(f"unitary shape {self.u.shape} does not match dims ({self.dim_a},{self.dim_b})")
        if not linalg.is_unitary(self.u, tol=self.unitarity_tol):
            raise ValueError("dilation matrix is not unitary within tolerance")

    @property
    def dim(self):
        return self.dim_a * self.dim_b


def kraus_from_unitary(u, dim_a, dim_b):
    """Kraus operators ``K_b = <b|_B u |0>_B`` as an array of shape (dim_b, dim_a, dim_a)."""
    u4 = np.asarray(u).reshape(dim_a, dim_b, dim_a, dim_b)
    return np.ascontiguousarray(u4[:, :, :, 0].transpose(1, 0, 2))


def kraus_operators(c):
    return kraus_from_unitary(c.u, c.dim_a, c.dim_b)


def apply(c, rho):
    """One channel application (consumes one fresh ancilla register)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (c.dim_a, c.dim_a):
        raise ValueError("state dimension does not match the channel's system factor")
    ks = kraus_operators(c)
    out = np.einsum("bij,jk,blk->il", ks, rho, ks.conj())
    c.ancillas_consumed += 1
    return out


def superoperator(c):
    """Matrix of the induced system map on column-stacked states."""
    ks = kraus_operators(c)
    d = c.dim_a
    s = np.zeros((d * d, d * d), dtype=complex)
    for k in ks:
        s += np.kron(k.conj(), k)
    return s


def extrapolate(c, rho0, n):
    """States after 1..n repeated applications of the channel.

    Iterates the induced system superoperator rather than growing the joint
    register; the bookkeeping is identical to attaching ``n`` fresh ancilla
    registers (reflected in ``c.ancillas_consumed``).
    """
    if n < 0:
        raise ValueError("step count must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (c.dim_a, c.dim_a):
        raise ValueError("state dimension does not match the channel's system factor")
    s = superoperator(c)
    out = []
    v = linalg.vec(rho0)
    for _ in range(n):
        v = s @ v
        rho = linalg.unvec(v, c.dim_a)
        out.append(0.5 * (rho + dag(rho)))
    c.ancillas_consumed += n
    return out


def choi_matrix(c):
    """Unnormalized Choi matrix ``sum_ij |i><j| x Phi(|i><j|)``.

    For the identity channel this equals ``dim_a`` times the projector on the
    maximally entangled state.
    """
    ks = kraus_operators(c)
    d = c.dim_a
    choi = np.zeros((d * d, d * d), dtype=complex)
    for k in ks:
        w = k.T.reshape(-1)  # sum_i |i> x K|i>
        choi += np.outer(w, w.conj())
    return choi


def is_completely_positive(c, tol=1e-10):
    """Choi matrix PSD within ``tol`` (accepts a channel or a Choi matrix)."""
    choi = c if isinstance(c, np.ndarray) else choi_matrix(c)
    return np.linalg.eigvalsh(choi).min() >= -tol


def is_trace_preserving(c, tol=1e-10):
    """Output-traced Choi matrix equals the identity within ``tol``."""
    if isinstance(c, np.ndarray):
        d = int(round(np.sqrt(c.shape[0])))
        choi = c
    else:
        d = c.dim_a
        choi = choi_matrix(c)
    return np.abs(linalg.partial_trace_b(choi, d, d) - np.eye(d)).max() <= tol

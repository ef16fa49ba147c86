"""Dense complex linear algebra helpers shared by the whole package.

Conventions used throughout:

* Operators are dense ``numpy`` arrays of ``complex`` dtype.
* Multi-qubit registers order qubit 0 as the *leftmost* (most significant)
  tensor factor, so basis index ``i`` corresponds to the big-endian bit
  string of ``i``.
* ``vec``/``unvec`` use column stacking, so ``vec(A @ X @ B) ==
  kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

import numbers

import numpy as np
import scipy.linalg

__all__ = [
    "kron",
    "kron_all",
    "embed_one_qubit",
    "vec",
    "unvec",
    "dag",
    "partial_trace_b",
    "expm",
    "herm_propagator",
    "herm_propagator_frechet",
    "psd_sqrt",
    "haar_random_state",
    "is_hermitian",
    "is_unitary",
    "is_psd",
]

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SINGLE_PAULIS = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def kron(a, b):
    """Kronecker product with the left factor most significant."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(ops):
    """Kronecker product of a sequence of operators, first factor leftmost."""
    ops = list(ops)
    if not ops:
        raise ValueError("kron_all needs at least one operator")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def embed_one_qubit(op, qubit, n_qubits):
    """Embed a single-qubit operator at position ``qubit`` of an n-qubit register."""
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {n_qubits} qubits")
    factors = [I2] * n_qubits
    factors[qubit] = np.asarray(op, dtype=complex)
    return kron_all(factors)


def vec(m):
    """Column-stacking vectorization of a matrix."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, dim):
    """Inverse of :func:`vec` for a ``dim x dim`` matrix."""
    return np.asarray(v).reshape((dim, dim), order="F")


def dag(a):
    return np.asarray(a).conj().T


def partial_trace_b(m, dim_a, dim_b):
    """Trace out the trailing ``dim_b``-dimensional factor of a bipartite operator.

    Parameters
    ----------
    m : array_like
        Square operator on a tensor-product space of dimension ``dim_a * dim_b``
        with the A factor most significant.
    dim_a, dim_b : int
        Factor dimensions.

    Returns
    -------
    numpy.ndarray
        ``dim_a x dim_a`` reduced operator.
    """
    m = np.asarray(m)
    n = dim_a * dim_b
    if m.shape != (n, n):
        raise ValueError(f"operator shape {m.shape} does not match dims ({dim_a},{dim_b})")
    return np.einsum("ajbj->ab", m.reshape(dim_a, dim_b, dim_a, dim_b))


def expm(a):
    """Matrix exponential of a square complex matrix.

    Delegates to :func:`scipy.linalg.expm` (scaling-and-squaring with Pade
    approximants).  Rejects non-finite input up front so failures surface
    with a clear message instead of NaN propagation.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm expects a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("expm input contains non-finite entries")
    return scipy.linalg.expm(a)


def herm_propagator(h, tau):
    """``exp(-1j * tau * h)`` for Hermitian ``h`` via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * tau * w)) @ v.conj().T


def _divided_difference_exp(mu):
    """Stable divided differences (exp(mu_a) - exp(mu_b)) / (mu_a - mu_b)."""
    delta = 0.5 * (mu[:, None] - mu[None, :])
    avg = 0.5 * (mu[:, None] + mu[None, :])
    small = np.abs(delta) < 1e-30
    safe = np.where(small, 1.0, delta)
    sinhc = np.where(small, 1.0, np.sinh(safe) / safe)
    return np.exp(avg) * sinhc


def herm_propagator_frechet(h, tau, directions):
    """Propagator ``exp(-1j tau h)`` and its exact derivatives along Hermitian directions.

    For each Hermitian ``b`` in ``directions`` returns
    ``d/ds exp(-1j * tau * (h + s b)) | s=0`` using the Daleckii-Krein
    divided-difference formula in the eigenbasis of ``h``.

    Returns
    -------
    (u, derivs) : (numpy.ndarray, list of numpy.ndarray)
    """
    w, v = np.linalg.eigh(h)
    mu = -1j * tau * w
    u = (v * np.exp(mu)) @ v.conj().T
    phi = _divided_difference_exp(mu) * (-1j * tau)
    vd = v.conj().T
    derivs = []
    for b in directions:
        b_tilde = vd @ b @ v
        derivs.append(v @ (b_tilde * phi) @ vd)
    return u, derivs


def psd_sqrt(m, tol=1e-10):
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero (round-off guard);
    anything below ``-tol`` raises, since that signals a genuinely
    indefinite input rather than noise.
    """
    m = np.asarray(m, dtype=complex)
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    if w.min() < -tol:
        raise ValueError(f"matrix is not PSD within tolerance: min eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, numbers.Integral):
        return np.random.default_rng(seed)
    raise TypeError(f"seed must be an int, Generator or None, got {type(seed)!r}")


def haar_random_state(n_qubits, seed):
    """Haar-random pure state on ``n_qubits`` qubits.

    Real and imaginary amplitude parts are drawn i.i.d. standard normal and
    the vector is normalized; unitary invariance of the Gaussian makes the
    result Haar distributed.  ``seed`` may be an int or a Generator (the
    latter lets callers draw reproducible sequences of states).
    """
    rng = _as_rng(seed)
    dim = 2**n_qubits
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return amps / np.linalg.norm(amps)


def is_hermitian(m, tol=1e-10):
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.abs(m - m.conj().T).max() <= tol


def is_unitary(m, tol=1e-10):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.abs(m @ m.conj().T - np.eye(m.shape[0])).max() <= tol


def is_psd(m, tol=1e-10):
    if not is_hermitian(m, tol):
        return False
    w = np.linalg.eigvalsh(np.asarray(m))
    return w.min() >= -tol

"""Markovian master-equation models: generators, exact propagation, references.

The generator acts on column-stacked density matrices, i.e. for
``drho/dt = -i[h, rho] + sum_k gamma_k (G rho G^+ - {G^+ G, rho}/2)`` the
matrix returned by :func:`build_liouvillian` satisfies
``vec(drho/dt) = L @ vec(rho)``.

Rates and Hamiltonians on the modelled system are dimensionless (hbar = 1);
time ``t`` is measured in the same units, so everything enters as ``rate * t``
products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import linalg
from .linalg import PAULI_X, PAULI_Z, dag, kron
from .training import TrainingSet

__all__ = [
    "LindbladModel",
    "build_liouvillian",
    "propagator",
    "propagate",
    "steady_state",
    "analytic_single_qubit",
    "exact_dilation_single_decay",
    "make_training_set",
    "single_qubit_decay",
    "plus_minus_decay",
    "two_qubit_decay",
    "driven_two_qubit_decay",
    "four_level_cascade",
    "FOUR_LEVEL_RATES_TEXT",
    "FOUR_LEVEL_RATES_CAPTION",
    "tfim_two_qubit",
    "basis_states",
    "fixed_pair_states",
    "haar_states",
]


@dataclass
class LindbladModel:
    """Hamiltonian plus weighted jump operators on a ``dim``-dimensional system."""

    h: np.ndarray
    jumps: list = field(default_factory=list)  # list of (rate, operator)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.ndim != 2 or self.h.shape[0] != self.h.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got shape {self.h.shape}")
        if not linalg.is_hermitian(self.h, tol=1e-10):
            raise ValueError("Hamiltonian must be Hermitian")
        jumps = []
        for rate, op in self.jumps:
            op = np.asarray(op, dtype=complex)
            if op.shape != self.h.shape:
                raise ValueError("jump operator shape does not match the Hamiltonian")
            if rate < 0:
                raise ValueError(f"jump rates must be non-negative, got {rate}")
            jumps.append((float(rate), op))
        self.jumps = jumps

    @property
    def dim(self):
        return self.h.shape[0]


def build_liouvillian(model):
    """Dense generator matrix acting on column-stacked density matrices."""
    d = model.dim
    eye = np.eye(d, dtype=complex)
    h = model.h
    lv = -1j * (kron(eye, h) - kron(h.T, eye))
    for rate, g in model.jumps:
        gg = dag(g) @ g
        lv += rate * (kron(g.conj(), g) - 0.5 * kron(eye, gg) - 0.5 * kron(gg.T, eye))
    return lv


def propagator(model, t):
    """``expm(L t)`` acting on column-stacked density matrices."""
    if t < 0:
        raise ValueError("propagation time must be non-negative")
    return linalg.expm(build_liouvillian(model) * t)


def propagate(model, rho0, t):
    """Evolve ``rho0`` for time ``t`` under the model's master equation."""
    rho0 = np.asarray(rho0, dtype=complex)
    d = model.dim
    if rho0.shape != (d, d):
        raise ValueError(f"state shape {rho0.shape} does not match model dimension {d}")
    rho_t = linalg.unvec(propagator(model, t) @ linalg.vec(rho0), d)
    # exact generator keeps Hermiticity; symmetrize away round-off only
    return 0.5 * (rho_t + dag(rho_t))


def steady_state(model):
    """Trace-one state in the kernel of the generator."""
    ns = scipy.linalg.null_space(build_liouvillian(model), rcond=1e-10)
    if ns.shape[1] == 0:
        raise ValueError("generator has no null vector at the given tolerance")
    rho = linalg.unvec(ns[:, 0], model.dim)
    rho = 0.5 * (rho + dag(rho))
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise ValueError("null vector is traceless; steady state not unique")
    return rho / tr


def _sinh_over(z, f):
    """sinh(z * f) / f, with the f -> 0 limit z."""
    if abs(f) < 1e-30:
        return complex(z)
    return np.sinh(z * f) / f


def analytic_single_qubit(rho0, gamma, omega, t):
    """Closed-form state of a resonantly driven decaying qubit.

    Model: ``h = (omega / 2) X`` with a single jump ``|0><1|`` at rate
    ``gamma``.  The published closed form omits the feed-in of
    ``Im(rho01(0))`` into the populations (it fails the pure-Rabi limit for
    states with imaginary coherence); the ``-4 omega Im(rho01)`` term below
    restores it, making the expression the exact solution of the master
    equation for every initial state.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2):
        raise ValueError("analytic_single_qubit expects a qubit state")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0.0 and omega == 0.0:
        return rho0.copy()

    g2 = gamma * gamma
    o2 = omega * omega
    denom = g2 + 2.0 * o2
    b_pop = (g2 + o2) / denom
    b_coh = 1j * gamma * omega / denom
    f = np.sqrt(complex(g2 - 16.0 * o2))

    p00 = rho0[0, 0].real
    re01 = rho0[0, 1].real
    im01 = rho0[0, 1].imag

    a_pop = p00 - b_pop
    envelope = np.exp(-0.75 * gamma * t)
    ch = np.cosh(0.25 * t * f)
    sh = _sinh_over(0.25 * t, f)

    c_pop = -gamma * a_pop + 4.0 * gamma * o2 / denom - 4.0 * omega * im01
    rho00 = (b_pop + envelope * (a_pop * ch + c_pop * sh)).real

    a_coh = 1j * im01 - b_coh
    c_coh = gamma * a_coh + 4j * omega * a_pop
    rho01 = b_coh + re01 * np.exp(-0.5 * gamma * t) + envelope * (a_coh * ch + c_coh * sh)

    return np.array([[rho00, rho01], [np.conj(rho01), 1.0 - rho00]], dtype=complex)


def exact_dilation_single_decay(gamma, t):
    """Exact one-ancilla dilation unitary of the undriven decay channel.

    Basis order is (system, ancilla) with the system qubit most significant.
    Tracing the ancilla of ``U (rho x |0><0|) U^+`` reproduces the decay
    channel with survival amplitude ``exp(-gamma t / 2)``.
    """
    if gamma < 0 or t < 0:
        raise ValueError("gamma and t must be non-negative")
    e = np.exp(-0.5 * gamma * t)
    s = np.sqrt(1.0 - np.exp(-gamma * t))
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, e, -s, 0.0],
            [0.0, s, e, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
        dtype=complex,
    )


def make_training_set(model, states, observables, dt, n_steps, include_steady_state=False):
    """Exact measurement targets for every (state, observable) pair and step.

    Targets are ``Tr[O_l rho_l(n dt)]`` for ``n = 1..n_steps``, computed from
    the exact semigroup element ``expm(L dt)`` applied repeatedly.  With
    ``include_steady_state`` a fixed point of the generator is appended as an
    extra initial state (its targets are constant across steps).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    d = model.dim
    prepared = []
    for st in states:
        st = np.asarray(st, dtype=complex)
        if st.ndim == 1:
            st = np.outer(st, st.conj())
        if st.shape != (d, d):
            raise ValueError(f"state shape {st.shape} does not match model dimension {d}")
        prepared.append(st)
    if include_steady_state:
        prepared.append(steady_state(model))
    obs = [np.asarray(o, dtype=complex) for o in observables]
    for o in obs:
        if o.shape != (d, d):
            raise ValueError("observable dimension does not match the model")

    step = propagator(model, dt)
    n_states, n_obs = len(prepared), len(obs)
    vecs = np.stack([linalg.vec(s) for s in prepared], axis=1)  # (d^2, n_states)
    obs_stack = np.stack(obs)

    traces = np.empty((n_states, n_obs, n_steps))
    for n in range(n_steps):
        vecs = step @ vecs
        rhos = vecs.T.reshape(n_states, d, d).transpose(0, 2, 1)  # undo column stacking
        vals = np.einsum("oab,sba->so", obs_stack, rhos)
        if np.abs(vals.imag).max() > 1e-9:
            raise ValueError("target expectation has a non-negligible imaginary part")
        traces[:, :, n] = vals.real

    state_index = np.repeat(np.arange(n_states), n_obs)
    obs_index = np.tile(np.arange(n_obs), n_states)
    targets = traces[state_index, obs_index, :]  # (L, n_steps)
    return TrainingSet(
        states=np.stack(prepared),
        observables=obs_stack,
        state_index=state_index,
        obs_index=obs_index,
        targets=targets,
        dt=float(dt),
    )


# ---------------------------------------------------------------------------
# model presets
# ---------------------------------------------------------------------------

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)

FOUR_LEVEL_RATES_TEXT = (0.5, 0.4, 0.3)
FOUR_LEVEL_RATES_CAPTION = (0.6, 0.5, 0.4)


def single_qubit_decay(gamma=0.5, omega=0.5):
    """Resonantly driven qubit decaying from |1> to |0>."""
    h = 0.5 * omega * PAULI_X
    return LindbladModel(h=h, jumps=[(gamma, SIGMA_MINUS.copy())])


def plus_minus_decay(gamma=0.5):
    """Qubit decaying from |+> to |->, no drive."""
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    minus = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
    jump = np.outer(minus, plus.conj())
    return LindbladModel(h=np.zeros((2, 2)), jumps=[(gamma, jump)])


def two_qubit_decay(gamma0=0.5, gamma1=0.3, v=0.0):
    """Two qubits with independent decay and an optional |11><11| interaction."""
    dim = 4
    h = np.zeros((dim, dim), dtype=complex)
    h[3, 3] = v
    j0 = kron(SIGMA_MINUS, np.eye(2))
    j1 = kron(np.eye(2), SIGMA_MINUS)
    return LindbladModel(h=h, jumps=[(gamma0, j0), (gamma1, j1)])


def driven_two_qubit_decay(gamma0=0.3, omega0=0.5, gamma1=0.2, omega1=0.35, v=0.2):
    """Two resonantly driven decaying qubits with a |11><11| interaction."""
    eye = np.eye(2)
    h = 0.5 * omega0 * kron(PAULI_X, eye) + 0.5 * omega1 * kron(eye, PAULI_X)
    h[3, 3] += v
    j0 = kron(SIGMA_MINUS, eye)
    j1 = kron(eye, SIGMA_MINUS)
    return LindbladModel(h=h, jumps=[(gamma0, j0), (gamma1, j1)])


def four_level_cascade(rates=FOUR_LEVEL_RATES_TEXT):
    """Cascade 3 -> 2 -> 1 -> 0 of a four-level system in a two-qubit encoding.

    Levels map to basis states as 3 -> |10>, 2 -> |11>, 1 -> |01>, 0 -> |00>,
    so each decay flips exactly one qubit.  ``rates`` orders the decays from
    the top of the cascade down.
    """
    if len(rates) != 3:
        raise ValueError("the cascade has exactly three decay rates")
    level_to_index = {3: 2, 2: 3, 1: 1, 0: 0}  # |10>=2, |11>=3, |01>=1, |00>=0
    jumps = []
    for (upper, lower), rate in zip([(3, 2), (2, 1), (1, 0)], rates):
        op = np.zeros((4, 4), dtype=complex)
        op[level_to_index[lower], level_to_index[upper]] = 1.0
        jumps.append((rate, op))
    return LindbladModel(h=np.zeros((4, 4)), jumps=jumps)


def tfim_two_qubit(b=0.5, j=0.4, gamma0=0.5, gamma1=0.3):
    """Two-site transverse-field Ising chain with per-qubit decay."""
    h = -b * (kron(PAULI_X, np.eye(2)) + kron(np.eye(2), PAULI_X)) + j * kron(PAULI_Z, PAULI_Z)
    j0 = kron(SIGMA_MINUS, np.eye(2))
    j1 = kron(np.eye(2), SIGMA_MINUS)
    return LindbladModel(h=h, jumps=[(gamma0, j0), (gamma1, j1)])


# ---------------------------------------------------------------------------
# training-state families
# ---------------------------------------------------------------------------


def basis_states(dim):
    """Computational basis states as density matrices."""
    states = []
    for i in range(dim):
        rho = np.zeros((dim, dim), dtype=complex)
        rho[i, i] = 1.0
        states.append(rho)
    return states


def fixed_pair_states(dim):
    """Basis states plus equal-weight, phase-free two-basis superpositions.

    For ``dim = 4`` this is the deterministic ten-state family (4 basis kets
    and the 6 pairwise superpositions ``(|i> + |j>)/sqrt(2)``).
    """
    states = basis_states(dim)
    for i in range(dim):
        for j in range(i + 1, dim):
            ket = np.zeros(dim, dtype=complex)
            ket[i] = ket[j] = 1.0 / np.sqrt(2.0)
            states.append(np.outer(ket, ket.conj()))
    return states


def haar_states(n_qubits, count, seed):
    """``count`` seeded Haar-random pure states as density matrices."""
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(count):
        ket = linalg.haar_random_state(n_qubits, rng)
        states.append(np.outer(ket, ket.conj()))
    return states

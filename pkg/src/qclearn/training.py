"""Losses, gradients and the variational optimizer for dilation learning.

The data loss compares channel predictions against target expectation values:

    J(U) = sum_n sum_l ( Tr[O_l rhohat_{l,n}] - target_{l,n} )^2

where ``rhohat_{l,n}`` is the learned channel applied ``n`` times to the
training state of pair ``l``.  Pulse gradients are computed through the
adjoint/terminal-matrix route and integrated *exactly* over each constant
control segment (divided-difference Frechet derivative of the segment
exponential), so they agree with central finite differences of the discrete
objective to round-off-limited accuracy.

Sign and prefactor conventions of the terminal matrix are fixed so that the
assembled per-segment gradient is real and matches finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ansatz as ansatz_mod
from . import channel as channel_mod
from . import linalg
from .linalg import dag, herm_propagator_frechet, kron

__all__ = [
    "NumericalError",
    "TrainingSet",
    "zero_dissipation_targets",
    "loss",
    "multistep_loss",
    "fd_gradient",
    "pulled_back_observable",
    "AdjointState",
    "adjoint_terminal",
    "multistep_frechet",
    "eta_from_adjoint",
    "eta_from_commutators",
    "pulse_gradient",
    "pulse_objective",
    "qe_count",
    "OptimizerConfig",
    "IterationRecord",
    "OptimizeResult",
    "optimize",
    "GateProblem",
    "PulseProblem",
    "SplitResult",
    "optimize_split",
]


class NumericalError(RuntimeError):
    """Raised when an optimization or evaluation loses numerical validity."""


@dataclass
class TrainingSet:
    """Measurement targets for (initial state, observable) pairs over time steps.

    ``states`` holds the distinct initial density matrices, ``observables``
    the distinct measured operators; pair ``l`` couples
    ``states[state_index[l]]`` with ``observables[obs_index[l]]`` and carries
    targets for steps ``1..n_steps`` in ``targets[l, :]``.

    ``mask`` (optional, defaults to all ones) marks which (pair, step) data
    were measured; a zero entry removes that datum from the loss.  Residuals
    are multiplied by the mask, so masked data drop out of the loss and, by
    linearity, out of every gradient route (binary masks keep the residual
    weighting idempotent, which the adjoint derivation relies on).
    """

    states: np.ndarray  # (n_states, d, d)
    observables: np.ndarray  # (n_obs, d, d)
    state_index: np.ndarray  # (L,)
    obs_index: np.ndarray  # (L,)
    targets: np.ndarray  # (L, n_steps)
    dt: float
    mask: np.ndarray | None = None  # (L, n_steps) of 0/1

    def __post_init__(self):
        if self.targets.shape[0] != self.state_index.shape[0]:
            raise ValueError("targets and pair indices disagree on the number of pairs")
        if self.state_index.shape != self.obs_index.shape:
            raise ValueError("pair index arrays must have equal length")
        if self.mask is None:
            self.mask = np.ones_like(self.targets, dtype=float)
        else:
            self.mask = np.asarray(self.mask, dtype=float)
            if self.mask.shape != self.targets.shape:
                raise ValueError("mask must have the same shape as targets")
            if not np.isin(self.mask, (0.0, 1.0)).all():
                raise ValueError("mask entries must be 0 or 1")

    @property
    def n_pairs(self):
        return self.targets.shape[0]

    @property
    def n_steps(self):
        return self.targets.shape[1]

    @property
    def dim_a(self):
        return self.states.shape[1]


def zero_dissipation_targets(ts, model):
    """Training-set copy whose targets come from the coherent part of ``model`` only.

    Used by the split protocol's first stage: the same states and observables,
    with targets generated by ``h`` alone (all jump rates dropped).
    """
    from . import lindblad  # local import; lindblad depends on this module

    coherent = lindblad.LindbladModel(h=model.h, jumps=[])
    out = lindblad.make_training_set(
        coherent, list(ts.states), list(ts.observables), ts.dt, ts.n_steps
    )
    out.mask = ts.mask.copy()
    return out


# ---------------------------------------------------------------------------
# channel predictions and losses
# ---------------------------------------------------------------------------


def _state_trajectories(u, dim_a, dim_b, states, n_steps):
    """Channel orbit of each state: array (n_states, n_steps + 1, d, d), index 0 = input."""
    ks = channel_mod.kraus_from_unitary(u, dim_a, dim_b)
    traj = np.empty((states.shape[0], n_steps + 1, dim_a, dim_a), dtype=complex)
    traj[:, 0] = states
    current = states
    for n in range(1, n_steps + 1):
        current = np.einsum("bij,sjk,blk->sil", ks, current, ks.conj(), optimize=True)
        traj[:, n] = current
    return traj


def _predicted_traces(u, dim_a, dim_b, ts, n_steps):
    """(L, n_steps) real predictions Tr[O_l rhohat_{l,n}] and the state trajectories."""
    traj = _state_trajectories(u, dim_a, dim_b, ts.states, n_steps)
    vals = np.einsum("oab,snba->son", ts.observables, traj[:, 1:], optimize=True)
    if np.abs(vals.imag).max() > 1e-9:
        raise NumericalError("predicted expectation value has an imaginary residue")
    preds = vals.real[ts.state_index, ts.obs_index, :]
    return preds, traj


def _residuals(u, dim_a, dim_b, ts, n_steps):
    preds, traj = _predicted_traces(u, dim_a, dim_b, ts, n_steps)
    return ts.mask[:, :n_steps] * (preds - ts.targets[:, :n_steps]), traj


def loss(c, ts):
    """Single-step data loss of a channel against the training set."""
    res, _ = _residuals(c.u, c.dim_a, c.dim_b, ts, 1)
    return float(np.sum(res[:, 0] ** 2))


def multistep_loss(c, ts, n_steps=None):
    """Data loss summed over time steps ``1..n_steps``."""
    n_steps = ts.n_steps if n_steps is None else n_steps
    if not 1 <= n_steps <= ts.n_steps:
        raise ValueError("n_steps exceeds the targets available in the training set")
    res, _ = _residuals(c.u, c.dim_a, c.dim_b, ts, n_steps)
    return float(np.sum(res**2))


def fd_gradient(f, x, eps=1e-5, indices=None):
    """Central finite-difference gradient of a scalar function.

    Only the entries listed in ``indices`` are probed (all by default); the
    remaining components of the returned vector are zero.
    """
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    probe = range(x.size) if indices is None else indices
    for i in probe:
        xp = x.copy()
        xp[i] += eps
        xm = x.copy()
        xm[i] -= eps
        grad[i] = (f(xp) - f(xm)) / (2.0 * eps)
    return grad


# ---------------------------------------------------------------------------
# adjoint machinery
# ---------------------------------------------------------------------------


def pulled_back_observable(u, obs, dim_a, dim_b, route="kraus"):
    """Heisenberg pull-back of a system observable through one channel use.

    ``route='kraus'`` evaluates ``sum_b K_b^+ O K_b``; ``route='trace'``
    evaluates the equivalent ``Tr_B[u^+ (O x I) u (I x |0><0|)]`` directly.
    Both are exposed so they can be checked against each other.
    """
    obs = np.asarray(obs, dtype=complex)
    if route == "kraus":
        ks = channel_mod.kraus_from_unitary(u, dim_a, dim_b)
        return np.einsum("bji,jk,bkl->il", ks.conj(), obs, ks, optimize=True)
    if route == "trace":
        p0 = np.zeros((dim_b, dim_b), dtype=complex)
        p0[0, 0] = 1.0
        inner = dag(u) @ kron(obs, np.eye(dim_b)) @ u @ kron(np.eye(dim_a), p0)
        return linalg.partial_trace_b(inner, dim_a, dim_b)
    raise ValueError(f"unknown route {route!r}")


def _ground_projector(dim_b):
    p0 = np.zeros((dim_b, dim_b), dtype=complex)
    p0[0, 0] = 1.0
    return p0


def _terminal_matrix(u_total, ts, n_steps, dim_a, dim_b):
    """G = sum_{n,l,k} e_{l,n} (O_{l,k} x I) U (rhohat_{l,n-k-1} x |0><0|).

    The inner-product convention is dJ = 4 Re Tr[G^+ dU]; multiplying by
    ``-4j`` gives the terminal adjoint matrix in the shared convention.
    """
    res, traj = _residuals(u_total, dim_a, dim_b, ts, n_steps)
    n_obs = ts.observables.shape[0]
    n_states = ts.states.shape[0]

    # e_sum[s, o, n] = sum of residuals of pairs with that state/observable
    e_sum = np.zeros((n_states, n_obs, n_steps))
    np.add.at(e_sum, (ts.state_index, ts.obs_index), res)

    pulled = np.empty((n_obs, n_steps, dim_a, dim_a), dtype=complex)
    pulled[:, 0] = ts.observables
    for k in range(1, n_steps):
        for o in range(n_obs):
            pulled[o, k] = pulled_back_observable(u_total, pulled[o, k - 1], dim_a, dim_b)

    p0 = _ground_projector(dim_b)
    eye_b = np.eye(dim_b)
    g = np.zeros_like(u_total)
    for s in range(n_states):
        for idx in range(n_steps):  # input-state index: rhohat_{s, idx}
            w = np.zeros((dim_a, dim_a), dtype=complex)
            for k in range(n_steps - idx):
                n = idx + k  # residual column for step n+1
                w += np.einsum("o,oab->ab", e_sum[s, :, n], pulled[:, k])
            if np.abs(w).max() == 0.0:
                continue
            g += kron(w, eye_b) @ u_total @ kron(traj[s, idx], p0)
    return g, res


@dataclass
class AdjointState:
    """Terminal adjoint matrix and its backward propagation rule.

    ``p_final`` is the matrix at final time; at earlier times the adjoint is
    ``P(tau) = U(tau) U(tau_f)^+ p_final`` (implemented by :meth:`at`).
    """

    p_final: np.ndarray
    u_final: np.ndarray

    def at(self, u_tau):
        return np.asarray(u_tau) @ dag(self.u_final) @ self.p_final


def adjoint_terminal(c, ts):
    """Terminal adjoint of the single-step loss, prefactor convention ``-4j``."""
    g, _ = _terminal_matrix(c.u, ts, 1, c.dim_a, c.dim_b)
    return AdjointState(p_final=-4j * g, u_final=np.asarray(c.u))


def multistep_frechet(c, ts, n_steps=None):
    """Terminal matrix of the multi-step loss (equals the single-step one at n=1)."""
    n_steps = ts.n_steps if n_steps is None else n_steps
    g, _ = _terminal_matrix(c.u, ts, n_steps, c.dim_a, c.dim_b)
    return -4j * g


def eta_from_adjoint(ops, u_tau, adjoint):
    """Gradient density eta_r(tau) from the propagated adjoint matrix.

    With the ``-4j`` terminal convention the real density along channel ``r``
    is ``-Re Tr[(Q_r + Q_r^+) P(tau) U(tau)^+]``.
    """
    pu = adjoint.at(u_tau) @ dag(u_tau)
    return np.array([-np.trace(op.b @ pu).real for op in ops])


def eta_from_commutators(ops, u_tau, u_final, ts, dim_b):
    """Same density via the commutator expansion over unitary control parts.

    eta_r(tau) = sum_l sum_k 2j e_l ( conj(c_k) Tr[rhohat_l(tau) [V_k^+, W_l]]
                                      + c_k Tr[rhohat_l(tau) [V_k, W_l]] )

    with ``W_l = Gamma^+ (O_l x I) Gamma`` and ``Gamma = U(tau_f) U(tau)^+``.
    Each trace is a measurable expectation on the evolved extended state.
    """
    dim_a = ts.dim_a
    res, _ = _residuals(u_final, dim_a, dim_b, ts, 1)
    gamma = u_final @ dag(u_tau)
    p0 = _ground_projector(dim_b)
    eye_b = np.eye(dim_b)

    rho_ext = [u_tau @ kron(ts.states[s], p0) @ dag(u_tau) for s in range(ts.states.shape[0])]
    w_obs = [dag(gamma) @ kron(o, eye_b) @ gamma for o in ts.observables]

    eta = np.zeros(len(ops), dtype=complex)
    for r, op in enumerate(ops):
        acc = 0.0j
        for l in range(ts.n_pairs):
            rho = rho_ext[ts.state_index[l]]
            w = w_obs[ts.obs_index[l]]
            for coeff, v in op.parts:
                comm_dag = dag(v) @ w - w @ dag(v)
                comm = v @ w - w @ v
                acc += res[l, 0] * (np.conj(coeff) * np.trace(rho @ comm_dag) + coeff * np.trace(rho @ comm))
        eta[r] = 2j * acc
    if np.abs(eta.imag).max() > 1e-9:
        raise NumericalError("commutator-form gradient density has an imaginary residue")
    return eta.real


# ---------------------------------------------------------------------------
# pulse objective and its exact gradient
# ---------------------------------------------------------------------------


def _pulse_unitaries(h_v, ops, sched, with_frechet):
    """Segment propagators (optionally with per-channel Frechet derivatives) and prefixes."""
    b_list = [op.b for op in ops]
    hs = ansatz_mod.segment_hamiltonians(h_v, ops, sched)
    dim = h_v.shape[0]
    segs, derivs = [], []
    for h in hs:
        if with_frechet:
            u_seg, d_list = herm_propagator_frechet(h, sched.dtau, b_list)
            derivs.append(d_list)
        else:
            u_seg = linalg.herm_propagator(h, sched.dtau)
        segs.append(u_seg)
    prefixes = [np.eye(dim, dtype=complex)]
    for u_seg in segs:
        prefixes.append(u_seg @ prefixes[-1])
    return segs, derivs, prefixes


def _ridge_term(sched, lam):
    return 0.5 * lam * float(np.sum(sched.values**2)) * sched.dtau


def pulse_objective(sched, h_v, ops, ts, lam=1e-3, n_steps=1, base=None):
    """Data loss of the pulse-generated dilation plus the control-energy ridge.

    The ridge term discretizes ``(lam / 2) sum_r int |z_r|^2 dtau`` on the
    pulse grid.  ``base`` right-multiplies the pulse unitary (used by the
    split protocol, where the total dilation is ``U_pulse (u_h x I)``).
    """
    _, _, prefixes = _pulse_unitaries(h_v, ops, sched, with_frechet=False)
    u_total = prefixes[-1] if base is None else prefixes[-1] @ base
    dim = u_total.shape[0]
    dim_a = ts.dim_a
    dim_b = dim // dim_a
    res, _ = _residuals(u_total, dim_a, dim_b, ts, n_steps)
    value = float(np.sum(res**2)) + _ridge_term(sched, lam)
    if not math.isfinite(value):
        raise NumericalError("pulse objective is not finite")
    return value


def pulse_gradient(sched, h_v, ops, ts, lam=1e-3, n_steps=1, base=None):
    """Objective and its exact gradient with respect to every segment value.

    The data term integrates the adjoint gradient density exactly over each
    segment (Daleckii-Krein derivative of the segment exponential), i.e.

        d J_data / d z_{r,j} = 4 Re Tr[ G^+  U(tau_f) U(tau_j)^+  D_{r,j}  U(tau_{j-1}) ]

    with ``G`` the terminal matrix of the (multi-step) loss; the ridge adds
    ``lam * z * dtau``.  Returns ``(objective, gradient)`` with the gradient
    shaped like ``sched.values``.
    """
    segs, derivs, prefixes = _pulse_unitaries(h_v, ops, sched, with_frechet=True)
    u_pulse = prefixes[-1]
    u_total = u_pulse if base is None else u_pulse @ base
    dim = u_total.shape[0]
    dim_a = ts.dim_a
    dim_b = dim // dim_a
    if dim_a * dim_b != dim:
        raise ValueError("training-set dimension does not divide the register dimension")

    g_mat, res = _terminal_matrix(u_total, ts, n_steps, dim_a, dim_b)
    if base is not None:
        g_mat = g_mat @ dag(base)

    grad = np.empty_like(sched.values)
    gd = dag(g_mat)
    for j in range(sched.n_segments):
        gamma_j = u_pulse @ dag(prefixes[j + 1])
        w = prefixes[j] @ gd @ gamma_j
        for r in range(sched.n_channels):
            grad[r, j] = 4.0 * np.sum(w * derivs[j][r].T).real
    grad += lam * sched.values * sched.dtau

    value = float(np.sum(res**2)) + _ridge_term(sched, lam)
    if not math.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NumericalError("pulse objective or gradient is not finite")
    return value, grad


# ---------------------------------------------------------------------------
# quantum-evaluation accounting
# ---------------------------------------------------------------------------


def qe_count(method, **dims):
    """Quantum state evaluations needed for one gradient, by method.

    gate:            3 * d * m           (one evaluation per circuit angle)
    pulse:           N * K * R           (per segment, unitary part and channel)
    multistep_pulse: N_steps (N_steps - 1) / 2 * K * L * R
    """

    def need(*names):
        vals = []
        for name in names:
            if name not in dims:
                raise ValueError(f"method {method!r} needs dimension {name!r}")
            v = int(dims[name])
            if v < 1:
                raise ValueError(f"dimension {name!r} must be a positive integer")
            vals.append(v)
        return vals

    if method == "gate":
        d, m = need("d", "m")
        return 3 * d * m
    if method == "pulse":
        n, k, r = need("N", "K", "R")
        return n * k * r
    if method == "multistep_pulse":
        n_steps, k, l, r = need("N_steps", "K", "L", "R")
        return n_steps * (n_steps - 1) // 2 * k * l * r
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------


@dataclass
class OptimizerConfig:
    """Gradient-descent settings (Armijo backtracking line search)."""

    max_iters: int = 500
    seed: int = 0
    fd_eps: float = 1e-5
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    armijo_max_backtracks: int = 25
    alpha_init: float = 1.0
    batch_fraction: float = 1.0
    loss_tol: float = 1e-10
    stall_limit: int = 5
    qe_budget: int | None = None

    def __post_init__(self):
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ValueError("batch_fraction must lie in (0, 1]")
        for name in ("max_iters", "armijo_max_backtracks", "stall_limit"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("fd_eps", "armijo_c", "armijo_shrink", "alpha_init", "loss_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class IterationRecord:
    iteration: int
    loss: float
    grad_norm: float
    alpha: float
    qe_cumulative: int


@dataclass
class OptimizeResult:
    params: np.ndarray
    loss_trace: np.ndarray
    qe_trace: np.ndarray
    records: list
    status: str
    params_history: list = field(default_factory=list)

    @property
    def final_loss(self):
        return float(self.loss_trace[-1])


def optimize(problem, cfg):
    """Minimize the problem's objective by Armijo-backtracked gradient descent.

    Stops at the iteration cap, when the loss falls below ``loss_tol``, after
    ``stall_limit`` consecutive exhausted line searches, or once the
    cumulative quantum-evaluation budget is spent.  Fully deterministic for a
    fixed seed.
    """
    rng = np.random.default_rng(cfg.seed)
    x = np.asarray(problem.initial_params(rng), dtype=float)
    j_curr = problem.loss(x)
    if not math.isfinite(j_curr):
        raise NumericalError("initial objective is not finite")

    records = [IterationRecord(0, j_curr, 0.0, 0.0, 0)]
    loss_trace = [j_curr]
    qe_trace = [0]
    params_history = [x.copy()]
    qe_cum = 0
    stalls = 0
    status = "max_iters"

    if j_curr < cfg.loss_tol:
        status = "converged"
        cfg_max = 0
    else:
        cfg_max = cfg.max_iters

    for it in range(1, cfg_max + 1):
        indices = None
        if cfg.batch_fraction < 1.0:
            n_active = max(1, math.ceil(cfg.batch_fraction * x.size))
            indices = np.sort(rng.choice(x.size, size=n_active, replace=False))
        grad = problem.gradient(x, indices=indices)
        if not np.all(np.isfinite(grad)):
            raise NumericalError("gradient is not finite")
        qe_cum += problem.qe_per_gradient(x.size if indices is None else len(indices))
        gnorm = float(np.linalg.norm(grad))

        if gnorm == 0.0:
            records.append(IterationRecord(it, j_curr, 0.0, 0.0, qe_cum))
            loss_trace.append(j_curr)
            qe_trace.append(qe_cum)
            params_history.append(x.copy())
            status = "converged"
            break

        alpha = cfg.alpha_init
        accepted = False
        for _ in range(cfg.armijo_max_backtracks + 1):
            x_trial = x - alpha * grad
            j_trial = problem.loss(x_trial)
            if j_trial <= j_curr - cfg.armijo_c * alpha * gnorm**2:
                accepted = True
                break
            alpha *= cfg.armijo_shrink

        if accepted:
            x, j_curr = x_trial, j_trial
            stalls = 0
        else:
            alpha = 0.0  # exhausted line search: keep the iterate, log the stall
            stalls += 1

        records.append(IterationRecord(it, j_curr, gnorm, alpha, qe_cum))
        loss_trace.append(j_curr)
        qe_trace.append(qe_cum)
        params_history.append(x.copy())

        if j_curr < cfg.loss_tol:
            status = "converged"
            break
        if stalls >= cfg.stall_limit:
            status = "stalled"
            break
        if cfg.qe_budget is not None and qe_cum >= cfg.qe_budget:
            status = "qe_budget"
            break

    return OptimizeResult(
        params=x,
        loss_trace=np.asarray(loss_trace),
        qe_trace=np.asarray(qe_trace),
        records=records,
        status=status,
        params_history=params_history,
    )


class GateProblem:
    """Layered-circuit dilation trained with finite-difference gradients."""

    def __init__(self, gate_ansatz, ts, dim_a, dim_b, n_steps=1, fd_eps=1e-5, init_scale=0.1):
        if 2**gate_ansatz.n_qubits != dim_a * dim_b:
            raise ValueError("ansatz register does not match the channel dimensions")
        self.ansatz = gate_ansatz
        self.ts = ts
        self.dim_a = dim_a
        self.dim_b = dim_b
        self.n_steps = n_steps
        self.fd_eps = fd_eps
        self.init_scale = init_scale

    @property
    def n_params(self):
        return self.ansatz.n_params

    def initial_params(self, rng):
        return ansatz_mod.init_gate_params(self.ansatz, rng, scale=self.init_scale)

    def unitary(self, theta):
        return ansatz_mod.gate_unitary(self.ansatz, theta)

    def channel(self, theta):
        return channel_mod.StinespringChannel(self.unitary(theta), self.dim_a, self.dim_b)

    def loss(self, theta):
        res, _ = _residuals(self.unitary(theta), self.dim_a, self.dim_b, self.ts, self.n_steps)
        return float(np.sum(res**2))

    def gradient(self, theta, indices=None):
        return fd_gradient(self.loss, theta, eps=self.fd_eps, indices=indices)

    def qe_per_gradient(self, n_active):
        # full gradient costs 3 d m evaluations; a batch costs its share
        return int(n_active)


class PulseProblem:
    """Piecewise-constant pulse dilation trained with exact adjoint gradients.

    ``init_scale = 0`` starts from all-zero pulses.  That start is a saddle
    whenever the drift is diagonal (e.g. van der Waals): every segment
    Hamiltonian then conserves each qubit's excitation number while the
    ancillas begin in the ground state, so the gradient of every ancilla
    control vanishes identically and gradient descent can never populate the
    ancillas, i.e. never learn dissipation.  A small nonzero ``init_scale``
    (values drawn uniformly from ``[-init_scale, init_scale]``) breaks the
    symmetry and is used by the shipped experiment presets.
    """

    def __init__(self, h_v, ops, n_segments, tau_f, ts, dim_a, dim_b, lam=1e-3,
                 n_steps=1, base=None, init_scale=0.0):
        if h_v.shape[0] != dim_a * dim_b:
            raise ValueError("drift dimension does not match the channel dimensions")
        if init_scale < 0:
            raise ValueError("init_scale must be non-negative")
        self.h_v = h_v
        self.ops = ops
        self.n_segments = n_segments
        self.tau_f = tau_f
        self.ts = ts
        self.dim_a = dim_a
        self.dim_b = dim_b
        self.lam = lam
        self.n_steps = n_steps
        self.base = base
        self.init_scale = init_scale

    @property
    def n_params(self):
        return len(self.ops) * self.n_segments

    def initial_params(self, rng):
        if self.init_scale == 0.0:
            return np.zeros(self.n_params)
        return rng.uniform(-self.init_scale, self.init_scale, size=self.n_params)

    def schedule(self, z):
        return ansatz_mod.PulseSchedule(
            values=np.asarray(z, dtype=float).reshape(len(self.ops), self.n_segments),
            tau_f=self.tau_f,
        )

    def unitary(self, z):
        u = ansatz_mod.pulse_propagate(self.h_v, self.ops, self.schedule(z))
        return u if self.base is None else u @ self.base

    def channel(self, z):
        return channel_mod.StinespringChannel(self.unitary(z), self.dim_a, self.dim_b)

    def loss(self, z):
        return pulse_objective(
            self.schedule(z), self.h_v, self.ops, self.ts,
            lam=self.lam, n_steps=self.n_steps, base=self.base,
        )

    def loss_and_gradient(self, z):
        value, grad = pulse_gradient(
            self.schedule(z), self.h_v, self.ops, self.ts,
            lam=self.lam, n_steps=self.n_steps, base=self.base,
        )
        return value, grad.reshape(-1)

    def gradient(self, z, indices=None):
        _, grad = self.loss_and_gradient(z)
        if indices is not None:
            mask = np.zeros_like(grad)
            mask[indices] = grad[indices]
            grad = mask
        return grad

    def qe_per_gradient(self, n_active):
        k = len(self.ops[0].parts)
        r = len(self.ops)
        if self.n_steps == 1:
            return qe_count("pulse", N=self.n_segments, K=k, R=r)
        return qe_count("multistep_pulse", N_steps=self.n_steps, K=k, L=self.ts.n_pairs, R=r)


@dataclass
class SplitResult:
    stage1: OptimizeResult
    stage2: OptimizeResult
    u_system: np.ndarray

    @property
    def params(self):
        return self.stage2.params

    @property
    def final_loss(self):
        return self.stage2.final_loss


def optimize_split(stage1_problem, stage2_builder, cfg1, cfg2):
    """Two-stage split training.

    Stage 1 learns the coherent factor (its problem should target the
    zero-dissipation training copy); ``stage2_builder(u_system)`` must return
    the full-register problem whose dilation composes the frozen coherent
    unitary, which stage 2 then trains against the full targets.
    """
    res1 = optimize(stage1_problem, cfg1)
    u_system = stage1_problem.unitary(res1.params)
    stage2_problem = stage2_builder(u_system)
    res2 = optimize(stage2_problem, cfg2)
    return SplitResult(stage1=res1, stage2=res2, u_system=u_system)

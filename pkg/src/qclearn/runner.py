"""Experiment orchestration: build from a config, train, evaluate, export.

Every run writes the same delimited outputs into its output directory:

``convergence.csv``
    ``iter,loss,grad_norm,alpha,qe_cumulative`` per optimizer iteration
    (split training additionally writes ``convergence_stage1.csv``).
``populations.csv``
    ``t,state_index,exact,approx`` basis populations of one held-out showcase
    state along the extrapolated evolution (``state_index`` is the basis index).
``bures.csv``
    ``step,mean_bures,min,max`` Bures-distance statistics over the held-out
    evaluation states per extrapolation step.
``run.json``
    config echo, config hash and result summary, floats with 17 significant
    digits.

Matplotlib figures are rendered next to the CSV files unless disabled.
All floating-point output uses ``%.17g`` so reruns with the same config and
seed produce byte-identical files.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ansatz as ansatz_mod
from . import channel as channel_mod
from . import hardware, lindblad, metrics, training
from .config import ConfigError, _format_value, config_hash, to_dict

__all__ = [
    "CONVERGENCE_HEADER",
    "POPULATIONS_HEADER",
    "BURES_HEADER",
    "RunResult",
    "build_model",
    "build_train_states",
    "build_training_set",
    "build_geometry",
    "build_gate_problem",
    "build_pulse_problem",
    "build_optimizer_config",
    "run",
]

CONVERGENCE_HEADER = "iter,loss,grad_norm,alpha,qe_cumulative"
POPULATIONS_HEADER = "t,state_index,exact,approx"
BURES_HEADER = "step,mean_bures,min,max"

_UNSET = object()


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_model(cfg):
    params = dict(cfg.channel.params)
    if "rates" in params:
        params["rates"] = tuple(float(r) for r in params["rates"])
    return getattr(lindblad, cfg.channel.model)(**params)


def build_train_states(cfg):
    t = cfg.training
    if t.states == "haar":
        return lindblad.haar_states(cfg.n_system_qubits, t.n_states, t.states_seed)
    family = (
        lindblad.fixed_pair_states(cfg.dim_a)
        if t.states == "fixed_pairs"
        else lindblad.basis_states(cfg.dim_a)
    )
    if t.n_states > len(family):
        raise ConfigError(
            f"training.n_states: the {t.states!r} family on dimension {cfg.dim_a} "
            f"has only {len(family)} states, got n_states={t.n_states}"
        )
    return family[: t.n_states]


def build_training_set(cfg, model):
    states = build_train_states(cfg)
    observables = metrics.pauli_strings(cfg.n_system_qubits)
    ts = lindblad.make_training_set(
        model,
        states,
        observables,
        cfg.channel.dt,
        cfg.training.n_steps,
        include_steady_state=cfg.training.include_steady_state,
    )
    if cfg.training.l_counting == "total":
        # each pair measured at one round-robin step: the pair count is the
        # total number of measured values instead of the per-step count
        mask = np.zeros_like(ts.targets)
        mask[np.arange(ts.n_pairs), np.arange(ts.n_pairs) % ts.n_steps] = 1.0
        ts.mask = mask
    return ts


def build_geometry(cfg, n_atoms=None):
    hw = cfg.hardware
    kwargs = dict(c6=hw.c6, c3=hw.c3, interaction=hw.interaction)
    if hw.positions is not None:
        # explicit coordinates; a sub-register keeps its leading atoms in place
        pos = hw.positions if n_atoms is None else hw.positions[:n_atoms]
        return hardware.AtomGeometry(positions=pos, **kwargs)
    if n_atoms is None:
        n_atoms = cfg.n_total_qubits
        if hw.geometry == "pair":
            return hardware.pair_geometry(hw.spacing, **kwargs)
        if hw.geometry == "triangle":
            return hardware.triangle_geometry(hw.spacing, **kwargs)
    # sub-registers (e.g. the system-only stage of split training) fall back
    # to a chain with the same spacing and interaction constants
    return hardware.chain_geometry(n_atoms, hw.spacing, **kwargs)


def build_gate_problem(cfg, ts):
    h_v = hardware.drift_hamiltonian(build_geometry(cfg))
    gate_ansatz = ansatz_mod.GateAnsatz(
        n_qubits=cfg.n_total_qubits,
        depth=cfg.gate.depth,
        u_ent=ansatz_mod.entangling_gate(h_v, cfg.gate.tau_v),
        tau_g=cfg.gate.tau_g,
        tau_v=cfg.gate.tau_v,
    )
    return training.GateProblem(
        gate_ansatz,
        ts,
        cfg.dim_a,
        cfg.dim_b,
        n_steps=cfg.loss_horizon,
        fd_eps=cfg.optimizer.fd_eps,
        init_scale=cfg.gate.init_scale,
    )


def build_pulse_problem(cfg, ts, base=None, system_only=False):
    if system_only:
        n_qubits = cfg.n_system_qubits
        dim_b = 1
        geom = build_geometry(cfg, n_atoms=n_qubits)
    else:
        n_qubits = cfg.n_total_qubits
        dim_b = cfg.dim_b
        geom = build_geometry(cfg)
    return training.PulseProblem(
        hardware.drift_hamiltonian(geom),
        hardware.control_operators(n_qubits, cfg.hardware.control),
        cfg.pulse.n_segments,
        cfg.pulse.tau_f,
        ts,
        cfg.dim_a,
        dim_b,
        lam=cfg.pulse.ridge,
        n_steps=cfg.loss_horizon,
        base=base,
        init_scale=cfg.pulse.init_scale,
    )


def build_optimizer_config(cfg, seed=None, max_iters=None, batch_fraction=None, qe_budget=_UNSET):
    o = cfg.optimizer
    return training.OptimizerConfig(
        max_iters=o.max_iters if max_iters is None else max_iters,
        seed=cfg.experiment.seed if seed is None else seed,
        fd_eps=o.fd_eps,
        armijo_c=o.armijo_c,
        armijo_shrink=o.armijo_shrink,
        armijo_max_backtracks=o.armijo_max_backtracks,
        alpha_init=o.alpha_init,
        batch_fraction=o.batch_fraction if batch_fraction is None else batch_fraction,
        loss_tol=o.loss_tol,
        stall_limit=o.stall_limit,
        qe_budget=o.qe_budget if qe_budget is _UNSET else qe_budget,
    )


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_states(cfg):
    ev = cfg.evaluation
    return lindblad.haar_states(cfg.n_system_qubits, ev.n_eval_states, ev.eval_seed)


def evaluate_channel(cfg, model, learned):
    """Bures error curve of the learned channel over held-out states."""
    step = lindblad.propagator(model, cfg.channel.dt)
    return metrics.error_curve(
        step,
        learned,
        eval_states(cfg),
        cfg.evaluation.extrapolation_steps,
        squared=cfg.evaluation.squared_bures,
    )


def population_rows(cfg, model, learned, rho0):
    """Rows ``(t, basis_index, exact, approx)`` along the extrapolated evolution."""
    n = cfg.evaluation.extrapolation_steps
    dt = cfg.channel.dt
    rho0 = np.asarray(rho0, dtype=complex)
    approx = [rho0] + channel_mod.extrapolate(learned, rho0, n)
    step = lindblad.propagator(model, dt)
    rows = []
    v = rho0.reshape(-1, order="F")
    exact = rho0
    for k in range(n + 1):
        if k > 0:
            v = step @ v
            exact = v.reshape(rho0.shape, order="F")
        for i in range(rho0.shape[0]):
            rows.append((k * dt, i, exact[i, i].real, approx[k][i, i].real))
    return rows


# ---------------------------------------------------------------------------
# delimited + JSON output
# ---------------------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def write_convergence_csv(path, records):
    lines = [CONVERGENCE_HEADER]
    for r in records:
        lines.append(
            f"{r.iteration},{_fmt(r.loss)},{_fmt(r.grad_norm)},{_fmt(r.alpha)},{r.qe_cumulative}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_populations_csv(path, rows):
    lines = [POPULATIONS_HEADER]
    for t, idx, exact, approx in rows:
        lines.append(f"{_fmt(t)},{idx},{_fmt(exact)},{_fmt(approx)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_bures_csv(path, curve):
    lines = [BURES_HEADER]
    for step, mean, lo, hi in zip(curve.steps, curve.mean, curve.min, curve.max):
        lines.append(f"{int(step)},{_fmt(mean)},{_fmt(lo)},{_fmt(hi)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _json_text(obj, indent=0):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f'{pad}  "{k}": {_json_text(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(f"{pad}  {_json_text(v, indent + 1)}" for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    return _format_value(obj)


def write_run_json(path, record):
    Path(path).write_text(_json_text(record) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# run orchestration
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    status: str
    record: dict
    out_dir: Path
    learned: object | None = None
    curve: object | None = None


def _optimize_result_summary(result):
    return {
        "status": result.status,
        "iterations": len(result.loss_trace) - 1,
        "final_loss": result.final_loss,
        "qe_total": int(result.qe_trace[-1]),
    }


def _curve_summary(curve):
    return {
        "bures_mean_step1": float(curve.mean[0]),
        "bures_mean_final": float(curve.mean[-1]),
        "bures_mean": [float(x) for x in curve.mean],
    }


def _train_once(cfg, model, ts, method, seed, qe_budget=_UNSET, max_iters=None):
    """Train one dilation with the requested method; returns (result, problem)."""
    if method in ("gate", "stochastic_gate"):
        problem = build_gate_problem(cfg, ts)
        batch = cfg.optimizer.batch_fraction
        if method == "stochastic_gate" and batch >= 1.0:
            batch = cfg.compare.stochastic_batch_fraction
        opt_cfg = build_optimizer_config(
            cfg, seed=seed, batch_fraction=batch, qe_budget=qe_budget, max_iters=max_iters
        )
        return training.optimize(problem, opt_cfg), problem
    if method == "pulse":
        problem = build_pulse_problem(cfg, ts)
        opt_cfg = build_optimizer_config(cfg, seed=seed, qe_budget=qe_budget, max_iters=max_iters)
        return training.optimize(problem, opt_cfg), problem
    if method == "split_pulse":
        ts_coherent = training.zero_dissipation_targets(ts, model)
        stage1 = build_pulse_problem(cfg, ts_coherent, system_only=True)
        eye_b = np.eye(cfg.dim_b, dtype=complex)

        def stage2_builder(u_system):
            return build_pulse_problem(cfg, ts, base=np.kron(u_system, eye_b))

        cfg1 = build_optimizer_config(cfg, seed=seed, max_iters=cfg.optimizer.stage1_max_iters)
        cfg2 = build_optimizer_config(cfg, seed=seed, qe_budget=qe_budget, max_iters=max_iters)
        split = training.optimize_split(stage1, stage2_builder, cfg1, cfg2)
        problem = stage2_builder(split.u_system)
        return split, problem
    raise ConfigError(f"experiment.method {method!r} cannot be trained directly")


def _export_single(cfg, model, out_dir, learned, curve, results, split=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    showcase = eval_states(cfg)[0]
    rows = population_rows(cfg, model, learned, showcase)
    write_populations_csv(out_dir / "populations.csv", rows)
    write_bures_csv(out_dir / "bures.csv", curve)
    if split is not None:
        write_convergence_csv(out_dir / "convergence_stage1.csv", split.stage1.records)
    record = {
        "config": to_dict(cfg),
        "config_hash": config_hash(cfg),
        "results": results,
    }
    write_run_json(out_dir / "run.json", record)
    if cfg.output.figures:
        from . import figures

        figures.render_convergence(out_dir / "convergence.png", out_dir / "convergence.csv")
        figures.render_populations(out_dir / "populations.png", out_dir / "populations.csv")
        figures.render_bures(out_dir / "bures.png", out_dir / "bures.csv")
    return record


def run_exact(cfg, out_dir):
    """Reference pipeline without optimization: the closed-form decay dilation."""
    model = build_model(cfg)
    gamma = float(cfg.channel.params.get("gamma", 0.5))
    u = lindblad.exact_dilation_single_decay(gamma, cfg.channel.dt)
    learned = channel_mod.StinespringChannel(u, cfg.dim_a, cfg.dim_b)
    curve = evaluate_channel(cfg, model, learned)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_convergence_csv(out_dir / "convergence.csv", [])
    results = {"method": "exact", "status": "exact", **_curve_summary(curve)}
    record = _export_single(cfg, model, out_dir, learned, curve, results)
    return RunResult("exact", record, out_dir, learned, curve)


def run_single(cfg, out_dir, method=None, seed=None):
    """Train, evaluate and export one experiment; returns a :class:`RunResult`."""
    method = cfg.experiment.method if method is None else method
    seed = cfg.experiment.seed if seed is None else seed
    model = build_model(cfg)
    ts = build_training_set(cfg, model)
    started = time.perf_counter()
    result, problem = _train_once(cfg, model, ts, method, seed)
    wall = time.perf_counter() - started
    split = result if isinstance(result, training.SplitResult) else None
    final = result.stage2 if split is not None else result
    learned = problem.channel(result.params)
    curve = evaluate_channel(cfg, model, learned)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_convergence_csv(out_dir / "convergence.csv", final.records)
    results = {
        "method": method,
        "seed": seed,
        **_optimize_result_summary(final),
        **_curve_summary(curve),
        "wall_time_seconds": wall,
    }
    if split is not None:
        results["stage1"] = _optimize_result_summary(split.stage1)
    record = _export_single(cfg, model, out_dir, learned, curve, results, split=split)
    return RunResult(final.status, record, out_dir, learned, curve)


def run_compare(cfg, out_dir, seeds=None):
    """Run every compare method under a matched measurement budget."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = list(cfg.compare.seeds) if seeds is None else list(seeds)
    model = build_model(cfg)
    ts = build_training_set(cfg, model)
    runs = []
    curves = {}
    for method in cfg.compare.methods:
        curves[method] = []
        for seed in seeds:
            sub = out_dir / f"{method}_seed{seed}"
            sub.mkdir(parents=True, exist_ok=True)
            started = time.perf_counter()
            result, problem = _train_once(
                cfg, model, ts, method, seed, qe_budget=cfg.compare.qe_budget
            )
            wall = time.perf_counter() - started
            learned = problem.channel(result.params)
            curve = evaluate_channel(cfg, model, learned)
            write_convergence_csv(sub / "convergence.csv", result.records)
            results = {
                "method": method,
                "seed": seed,
                **_optimize_result_summary(result),
                **_curve_summary(curve),
                "wall_time_seconds": wall,
            }
            _export_single(cfg, model, sub, learned, curve, results)
            curves[method].append(curve)
            runs.append(results)
    record = {
        "config": to_dict(cfg),
        "config_hash": config_hash(cfg),
        "results": {"method": "compare", "qe_budget": cfg.compare.qe_budget, "runs": runs},
    }
    write_run_json(out_dir / "run.json", record)
    if cfg.output.figures:
        from . import figures

        figures.render_compare(out_dir / "compare.png", curves)
    return RunResult("compare", record, out_dir)


def run(cfg, out_dir, seed=None):
    """Dispatch a validated config to the matching pipeline."""
    if seed is not None:
        cfg.experiment.seed = seed
    if cfg.experiment.method == "exact":
        return run_exact(cfg, out_dir)
    if cfg.experiment.method == "compare":
        seeds = [cfg.experiment.seed] if seed is not None else None
        return run_compare(cfg, out_dir, seeds=seeds)
    return run_single(cfg, out_dir)

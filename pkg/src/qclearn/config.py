"""Experiment configuration: schema, validation, canonical serialization.

A run is described by one YAML file with flat sections mirroring the
dataclasses below.  Unknown sections or keys are rejected with the offending
dotted path, so presets and user configs stay honest against the schema.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "validate_config",
    "canonical_json",
    "config_hash",
    "MODEL_PARAMS",
    "METHODS",
]


class ConfigError(ValueError):
    """Invalid configuration file or values."""


METHODS = ("gate", "stochastic_gate", "pulse", "split_pulse", "compare", "exact")

# model name -> (allowed parameter names, system dimension)
MODEL_PARAMS = {
    "single_qubit_decay": (("gamma", "omega"), 2),
    "plus_minus_decay": (("gamma",), 2),
    "two_qubit_decay": (("gamma0", "gamma1", "v"), 4),
    "driven_two_qubit_decay": (("gamma0", "omega0", "gamma1", "omega1", "v"), 4),
    "four_level_cascade": (("rates",), 4),
    "tfim_two_qubit": (("b", "j", "gamma0", "gamma1"), 4),
}


@dataclass
class ExperimentSection:
    name: str = "run"
    seed: int = 0
    method: str = "pulse"


@dataclass
class ChannelSection:
    model: str = "single_qubit_decay"
    params: dict = field(default_factory=dict)
    dt: float = 0.25


@dataclass
class TrainingSection:
    states: str = "haar"  # haar | fixed_pairs | basis
    n_states: int = 10
    states_seed: int = 5
    observables: str = "pauli"
    n_steps: int = 4
    loss_horizon: int | None = None  # defaults to n_steps
    include_steady_state: bool = False
    # How the quoted pair count relates to the time steps: "per_step" measures
    # every (state, observable) pair at every step; "total" measures each pair
    # at a single step (assigned round-robin), keeping the overall datum count
    # equal to the pair count.
    l_counting: str = "per_step"


@dataclass
class DilationSection:
    n_ancilla_qubits: int = 1


@dataclass
class HardwareSection:
    geometry: str = "chain"  # pair | triangle | chain
    spacing: float = 1.0
    c6: float = 0.422
    c3: float = 0.0
    interaction: str = "vdw"
    control: str = "rotational"  # coupling | detuning | rotational
    # Explicit per-register-qubit [x, y] coordinates (um).  When given they
    # override the named geometry; entry i places register qubit i (system
    # qubits first, then ancillas).
    positions: list | None = None


@dataclass
class GateSection:
    depth: int = 10
    tau_g: float = 1.0
    tau_v: float = 10.0
    init_scale: float = 0.1


@dataclass
class PulseSection:
    n_segments: int = 20
    tau_f: float = 10.0
    ridge: float = 1e-3
    init_scale: float = 0.0


@dataclass
class OptimizerSection:
    max_iters: int = 500
    alpha_init: float = 1.0
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    armijo_max_backtracks: int = 25
    fd_eps: float = 1e-5
    batch_fraction: float = 1.0
    loss_tol: float = 1e-10
    stall_limit: int = 5
    qe_budget: int | None = None
    stage1_max_iters: int = 500  # split training only


@dataclass
class EvaluationSection:
    extrapolation_steps: int = 10
    n_eval_states: int = 10
    eval_seed: int = 99
    squared_bures: bool = False


@dataclass
class OutputSection:
    figures: bool = True


@dataclass
class CompareSection:
    methods: list = field(default_factory=lambda: ["gate", "stochastic_gate", "pulse"])
    qe_budget: int = 50000
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    stochastic_batch_fraction: float = 0.25


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    dilation: DilationSection = field(default_factory=DilationSection)
    hardware: HardwareSection = field(default_factory=HardwareSection)
    gate: GateSection = field(default_factory=GateSection)
    pulse: PulseSection = field(default_factory=PulseSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)
    output: OutputSection = field(default_factory=OutputSection)
    compare: CompareSection = field(default_factory=CompareSection)

    @property
    def n_system_qubits(self):
        dim = MODEL_PARAMS[self.channel.model][1]
        return int(round(math.log2(dim)))

    @property
    def n_total_qubits(self):
        return self.n_system_qubits + self.dilation.n_ancilla_qubits

    @property
    def dim_a(self):
        return 2**self.n_system_qubits

    @property
    def dim_b(self):
        return 2**self.dilation.n_ancilla_qubits

    @property
    def loss_horizon(self):
        h = self.training.loss_horizon
        return self.training.n_steps if h is None else h


_SECTIONS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce_scalar(path, value, annotation):
    optional = "None" in str(annotation)
    base = str(annotation).replace(" | None", "")
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{path}: value may not be null")
    if base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {type(value).__name__}")
        return value
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {type(value).__name__}")
        return value
    if base == "dict":
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a mapping, got {type(value).__name__}")
        return dict(value)
    if base == "list":
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {type(value).__name__}")
        return list(value)
    raise ConfigError(f"{path}: unsupported field type {annotation!r}")


def parse_config(raw):
    """Build an :class:`ExperimentConfig` from a nested dict, rejecting unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError(f"top level must be a mapping of sections, got {type(raw).__name__}")
    cfg = ExperimentConfig()
    for section_name, body in raw.items():
        if section_name not in _SECTIONS:
            known = ", ".join(sorted(_SECTIONS))
            raise ConfigError(f"unknown section {section_name!r} (known sections: {known})")
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"{section_name}: expected a mapping of fields")
        section = getattr(cfg, section_name)
        known_fields = {f.name: f.type for f in dataclasses.fields(section)}
        for key, value in body.items():
            path = f"{section_name}.{key}"
            if key not in known_fields:
                known = ", ".join(sorted(known_fields))
                raise ConfigError(f"unknown key {path!r} (known keys: {known})")
            setattr(section, key, _coerce_scalar(path, value, known_fields[key]))
    return validate_config(cfg)


def load_config(path):
    """Parse and validate a YAML configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if raw is None:
        raw = {}
    return parse_config(raw)


def _check_choice(path, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{path}: {value!r} is not one of {sorted(allowed)}")


def _check_positive(path, value, strict=True):
    if value is None:
        return
    if strict and value <= 0 or not strict and value < 0:
        raise ConfigError(f"{path}: must be {'positive' if strict else 'non-negative'}, got {value}")


def validate_config(cfg):
    """Cross-field validation; returns the config unchanged when consistent."""
    _check_choice("experiment.method", cfg.experiment.method, METHODS)
    _check_choice("channel.model", cfg.channel.model, MODEL_PARAMS)
    allowed, dim = MODEL_PARAMS[cfg.channel.model]
    for key, value in cfg.channel.params.items():
        if key not in allowed:
            raise ConfigError(
                f"channel.params.{key!r} is not a parameter of {cfg.channel.model} "
                f"(allowed: {', '.join(allowed)})"
            )
        if key == "rates":
            if not isinstance(value, list) or len(value) != 3 or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                raise ConfigError("channel.params.rates: expected a list of three numbers")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"channel.params.{key}: expected a number, got {value!r}")
    _check_positive("channel.dt", cfg.channel.dt)

    _check_choice("training.states", cfg.training.states, ("haar", "fixed_pairs", "basis"))
    _check_choice("training.observables", cfg.training.observables, ("pauli",))
    _check_choice("training.l_counting", cfg.training.l_counting, ("per_step", "total"))
    _check_positive("training.n_states", cfg.training.n_states)
    _check_positive("training.n_steps", cfg.training.n_steps)
    if cfg.training.loss_horizon is not None and not (
        1 <= cfg.training.loss_horizon <= cfg.training.n_steps
    ):
        raise ConfigError(
            f"training.loss_horizon: must lie in [1, n_steps={cfg.training.n_steps}]"
        )

    _check_positive("dilation.n_ancilla_qubits", cfg.dilation.n_ancilla_qubits)
    if cfg.dim_b > cfg.dim_a**2:
        raise ConfigError(
            f"dilation.n_ancilla_qubits: ancilla space (dim {cfg.dim_b}) exceeds the "
            f"maximal useful dilation dimension dim_a^2 = {cfg.dim_a**2}"
        )

    _check_choice("hardware.geometry", cfg.hardware.geometry, ("pair", "triangle", "chain"))
    _check_choice("hardware.interaction", cfg.hardware.interaction, ("vdw", "dipole"))
    _check_choice("hardware.control", cfg.hardware.control, ("coupling", "detuning", "rotational"))
    _check_positive("hardware.spacing", cfg.hardware.spacing)
    if cfg.hardware.positions is not None:
        pos = cfg.hardware.positions
        if len(pos) != cfg.n_total_qubits:
            raise ConfigError(
                f"hardware.positions: expected one [x, y] entry per register qubit "
                f"({cfg.n_total_qubits}), got {len(pos)}"
            )
        for i, entry in enumerate(pos):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
            ):
                raise ConfigError(f"hardware.positions[{i}]: expected [x, y] numbers")
    else:
        fixed_size = {"pair": 2, "triangle": 3}.get(cfg.hardware.geometry)
        if fixed_size is not None and fixed_size != cfg.n_total_qubits:
            raise ConfigError(
                f"hardware.geometry: {cfg.hardware.geometry!r} holds {fixed_size} atoms but the "
                f"register needs {cfg.n_total_qubits} (system {cfg.n_system_qubits} + "
                f"ancilla {cfg.dilation.n_ancilla_qubits}); use 'chain' or adjust the register"
            )

    _check_positive("gate.depth", cfg.gate.depth)
    _check_positive("gate.tau_g", cfg.gate.tau_g)
    _check_positive("gate.tau_v", cfg.gate.tau_v)
    _check_positive("gate.init_scale", cfg.gate.init_scale, strict=False)
    _check_positive("pulse.n_segments", cfg.pulse.n_segments)
    _check_positive("pulse.tau_f", cfg.pulse.tau_f)
    _check_positive("pulse.ridge", cfg.pulse.ridge, strict=False)
    _check_positive("pulse.init_scale", cfg.pulse.init_scale, strict=False)

    opt = cfg.optimizer
    _check_positive("optimizer.max_iters", opt.max_iters)
    _check_positive("optimizer.stage1_max_iters", opt.stage1_max_iters)
    _check_positive("optimizer.qe_budget", opt.qe_budget)
    if not 0.0 < opt.batch_fraction <= 1.0:
        raise ConfigError(f"optimizer.batch_fraction: must lie in (0, 1], got {opt.batch_fraction}")
    if cfg.experiment.method == "stochastic_gate" and opt.batch_fraction >= 1.0:
        raise ConfigError("optimizer.batch_fraction: stochastic_gate requires a fraction < 1")

    ev = cfg.evaluation
    _check_positive("evaluation.extrapolation_steps", ev.extrapolation_steps)
    _check_positive("evaluation.n_eval_states", ev.n_eval_states)

    if cfg.experiment.method == "compare":
        if not cfg.compare.methods:
            raise ConfigError("compare.methods: at least one method is required")
        for m in cfg.compare.methods:
            _check_choice("compare.methods", m, ("gate", "stochastic_gate", "pulse"))
        if not cfg.compare.seeds:
            raise ConfigError("compare.seeds: at least one seed is required")
        _check_positive("compare.qe_budget", cfg.compare.qe_budget)
        if not 0.0 < cfg.compare.stochastic_batch_fraction < 1.0:
            raise ConfigError("compare.stochastic_batch_fraction: must lie in (0, 1)")

    if cfg.experiment.method == "exact":
        if cfg.channel.model != "single_qubit_decay":
            raise ConfigError("experiment.method 'exact' supports only the single_qubit_decay model")
        if cfg.channel.params.get("omega", 0.0) != 0.0:
            raise ConfigError("experiment.method 'exact' requires omega = 0 (undriven decay)")
        if cfg.dilation.n_ancilla_qubits != 1:
            raise ConfigError("experiment.method 'exact' uses exactly one ancilla qubit")
    return cfg


# ---------------------------------------------------------------------------
# canonical serialization (deterministic bytes -> reproducible hash)
# ---------------------------------------------------------------------------


def _format_value(value):
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_format_value(v) for v in value) + "]"
    if isinstance(value, dict):
        items = sorted(value.items())
        return "{" + ",".join(f'"{k}":{_format_value(v)}' for k, v in items) + "}"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_dict(cfg):
    """Plain nested dict of every section and field."""
    return {
        section.name: dataclasses.asdict(getattr(cfg, section.name))
        for section in dataclasses.fields(cfg)
    }


def canonical_json(cfg):
    """Deterministic JSON text (sorted keys, 17-significant-digit floats)."""
    obj = cfg if isinstance(cfg, dict) else to_dict(cfg)
    return _format_value(obj)


def config_hash(cfg):
    """Hex digest identifying the configuration contents."""
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()

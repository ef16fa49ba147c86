import json
import re

import numpy as np
import pytest
import yaml

from qclearn import cli, runner
from qclearn.config import (
    ConfigError,
    canonical_json,
    config_hash,
    load_config,
    parse_config,
    to_dict,
    validate_config,
)

ALL_PRESETS = [
    "exact_dilation_sanity",
    "fig4_single_decay",
    "fig5_plus_minus_decay",
    "fig6_two_qubit_decay",
    "fig7_four_level",
    "fig8_tfim",
    "fig9_compare",
]


def tiny_config(**overrides):
    """Smallest real training run: undriven decay, one ancilla, a few iterations."""
    raw = {
        "experiment": {"name": "tiny", "seed": 0, "method": "pulse"},
        "channel": {"model": "single_qubit_decay", "params": {"gamma": 0.5, "omega": 0.0}},
        "training": {"states": "haar", "n_states": 2, "n_steps": 1},
        "dilation": {"n_ancilla_qubits": 1},
        "hardware": {"geometry": "pair", "control": "coupling"},
        "pulse": {"n_segments": 4, "tau_f": 2.0, "init_scale": 0.01},
        "optimizer": {"max_iters": 5},
        "evaluation": {"extrapolation_steps": 2, "n_eval_states": 2},
    }
    for section, body in overrides.items():
        raw.setdefault(section, {}).update(body)
    return raw


def write_config(tmp_path, raw, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# schema validation
# ---------------------------------------------------------------------------


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="unknown section 'pulses'"):
        parse_config({"pulses": {}})


def test_unknown_key_rejected_with_path():
    with pytest.raises(ConfigError, match=re.escape("pulse.tau_foo")):
        parse_config({"pulse": {"tau_foo": 1.0}})


def test_type_errors_name_the_field():
    with pytest.raises(ConfigError, match="optimizer.max_iters"):
        parse_config({"optimizer": {"max_iters": "many"}})
    with pytest.raises(ConfigError, match="channel.dt"):
        parse_config({"channel": {"dt": True}})
    with pytest.raises(ConfigError, match="experiment.name"):
        parse_config({"experiment": {"name": 7}})


def test_cross_field_validation():
    with pytest.raises(ConfigError, match="hardware.geometry"):
        parse_config(tiny_config(dilation={"n_ancilla_qubits": 2}))  # pair holds 2 atoms
    with pytest.raises(ConfigError, match="n_ancilla_qubits"):
        parse_config(
            tiny_config(dilation={"n_ancilla_qubits": 3}, hardware={"geometry": "chain"})
        )  # dim_b 8 > dim_a^2 = 4
    with pytest.raises(ConfigError, match="batch_fraction"):
        parse_config(tiny_config(experiment={"method": "stochastic_gate"}))
    with pytest.raises(ConfigError, match="loss_horizon"):
        parse_config(tiny_config(training={"n_steps": 2, "loss_horizon": 3}))
    with pytest.raises(ConfigError, match="omega"):
        parse_config(
            tiny_config(
                experiment={"method": "exact"},
                channel={"params": {"gamma": 0.5, "omega": 0.3}},
            )
        )
    with pytest.raises(ConfigError, match="positions"):
        parse_config(tiny_config(hardware={"positions": [[0.0, 0.0]]}))
    with pytest.raises(ConfigError, match="l_counting"):
        parse_config(tiny_config(training={"l_counting": "both"}))
    with pytest.raises(ConfigError, match="channel.params"):
        parse_config(tiny_config(channel={"params": {"gamma": 0.5, "vmax": 1.0}}))


def test_all_presets_validate():
    assert cli.preset_names() == ALL_PRESETS
    for name in ALL_PRESETS:
        cfg = load_config(cli.preset_path(name))
        assert cfg.experiment.name == name


def test_canonical_hash_roundtrip():
    cfg = load_config(cli.preset_path("fig4_single_decay"))
    h1 = config_hash(cfg)
    rebuilt = parse_config(to_dict(cfg))
    assert config_hash(rebuilt) == h1
    # 17-significant-digit float serialization
    cfg.channel.dt = 0.1
    assert '"dt":0.10000000000000001' in canonical_json(cfg)


def test_seed_changes_hash_but_not_schema():
    cfg1 = parse_config(tiny_config())
    cfg2 = parse_config(tiny_config(experiment={"seed": 1}))
    assert config_hash(cfg1) != config_hash(cfg2)


# ---------------------------------------------------------------------------
# command-line verbs and exit codes
# ---------------------------------------------------------------------------


def test_presets_list_and_show(capsys):
    assert cli.main(["presets", "list"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out == ALL_PRESETS
    assert cli.main(["presets", "show", "fig5_plus_minus_decay"]) == 0
    assert "plus_minus_decay" in capsys.readouterr().out
    assert cli.main(["presets", "show", "nope"]) == 1


def test_validate_verb(tmp_path, capsys):
    good = write_config(tmp_path, tiny_config())
    assert cli.main(["validate", "--config", str(good)]) == 0
    assert capsys.readouterr().out.startswith("OK ")

    bad = write_config(tmp_path, {"pulse": {"tau_foo": 1.0}}, name="bad.yaml")
    assert cli.main(["validate", "--config", str(bad)]) == 1
    assert "tau_foo" in capsys.readouterr().err

    assert cli.main(["validate", "--config", str(tmp_path / "missing.yaml")]) == 1
    assert cli.main(["validate", "--preset", "nope"]) == 1


def test_bad_arguments_are_config_errors(capsys):
    assert cli.main([]) == 1
    assert cli.main(["run"]) == 1
    assert cli.main(["frobnicate"]) == 1
    capsys.readouterr()


def test_numerical_failures_exit_2(tmp_path, monkeypatch, capsys):
    from qclearn.training import NumericalError

    def boom(cfg, out_dir, seed=None):
        raise NumericalError("lost positivity")

    monkeypatch.setattr(cli.runner, "run", boom)
    good = write_config(tmp_path, tiny_config())
    assert cli.main(["run", "--config", str(good), "--out", str(tmp_path / "o")]) == 2
    assert "numerical failure" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# end-to-end runs
# ---------------------------------------------------------------------------


def test_run_writes_expected_outputs(tmp_path, capsys):
    cfg_path = write_config(tmp_path, tiny_config())
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    capsys.readouterr()

    conv = (out / "convergence.csv").read_text().splitlines()
    assert conv[0] == "iter,loss,grad_norm,alpha,qe_cumulative"
    assert len(conv) == 2 + 5  # header + iteration 0 + 5 iterations
    pops = (out / "populations.csv").read_text().splitlines()
    assert pops[0] == "t,state_index,exact,approx"
    assert len(pops) == 1 + 3 * 2  # header + (2 steps + initial) x dim 2
    bures = (out / "bures.csv").read_text().splitlines()
    assert bures[0] == "step,mean_bures,min,max"
    assert len(bures) == 1 + 2

    # every float round-trips through %.17g exactly
    for line in conv[1:]:
        for tok in line.split(",")[1:4]:
            assert format(float(tok), ".17g") == tok

    record = json.loads((out / "run.json").read_text())
    assert record["config"]["experiment"]["name"] == "tiny"
    assert record["results"]["status"] in ("max_iters", "converged", "stalled", "qe_budget")
    assert len(record["config_hash"]) == 64
    for name in ("convergence.png", "populations.png", "bures.png"):
        assert (out / name).is_file()


def test_rerun_is_byte_identical(tmp_path, capsys):
    cfg_path = write_config(tmp_path, tiny_config())
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out2)]) == 0
    capsys.readouterr()
    for name in ("convergence.csv", "populations.csv", "bures.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_seed_override_changes_trajectory(tmp_path, capsys):
    cfg_path = write_config(tmp_path, tiny_config())
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out2), "--seed", "3"]) == 0
    capsys.readouterr()
    assert (out1 / "convergence.csv").read_bytes() != (out2 / "convergence.csv").read_bytes()
    rec = json.loads((out2 / "run.json").read_text())
    assert rec["config"]["experiment"]["seed"] == 3


def test_figures_can_be_disabled(tmp_path, capsys):
    cfg_path = write_config(tmp_path, tiny_config(output={"figures": False}))
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    capsys.readouterr()
    assert not list(out.glob("*.png"))
    assert (out / "convergence.csv").is_file()


def test_exact_preset_run(tmp_path, capsys):
    out = tmp_path / "sanity"
    assert cli.main(["run", "--preset", "exact_dilation_sanity", "--out", str(out)]) == 0
    capsys.readouterr()
    conv = (out / "convergence.csv").read_text().splitlines()
    assert conv == ["iter,loss,grad_norm,alpha,qe_cumulative"]
    data = np.genfromtxt(out / "bures.csv", delimiter=",", names=True)
    assert data["mean_bures"].max() < 1e-6  # closed-form dilation is exact


def test_split_run_writes_stage1_trace(tmp_path, capsys):
    raw = tiny_config(
        experiment={"method": "split_pulse"},
        channel={"params": {"gamma": 0.5, "omega": 0.5}},
        optimizer={"max_iters": 3, "stage1_max_iters": 3},
    )
    cfg_path = write_config(tmp_path, raw)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    capsys.readouterr()
    stage1 = (out / "convergence_stage1.csv").read_text().splitlines()
    assert stage1[0] == "iter,loss,grad_norm,alpha,qe_cumulative"
    assert len(stage1) == 2 + 3
    rec = json.loads((out / "run.json").read_text())
    assert rec["results"]["stage1"]["iterations"] == 3


def test_compare_run_layout(tmp_path, capsys):
    raw = tiny_config(
        experiment={"method": "compare"},
        gate={"depth": 2, "tau_g": 1.0, "tau_v": 2.0},
        compare={
            "methods": ["gate", "pulse"],
            "qe_budget": 100,
            "seeds": [0],
            "stochastic_batch_fraction": 0.5,
        },
    )
    cfg_path = write_config(tmp_path, raw)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    capsys.readouterr()
    for sub in ("gate_seed0", "pulse_seed0"):
        for name in ("convergence.csv", "populations.csv", "bures.csv", "run.json"):
            assert (out / sub / name).is_file()
    assert (out / "compare.png").is_file()
    rec = json.loads((out / "run.json").read_text())
    runs = rec["results"]["runs"]
    assert [r["method"] for r in runs] == ["gate", "pulse"]
    assert all(r["qe_total"] <= 100 + 50 for r in runs)


def test_l_counting_total_masks_training_set():
    cfg = parse_config(tiny_config(training={"n_steps": 2, "l_counting": "total"}))
    model = runner.build_model(cfg)
    ts = runner.build_training_set(cfg, model)
    assert ts.mask.sum() == ts.n_pairs  # one measured step per pair
    assert set(np.unique(ts.mask)) <= {0.0, 1.0}
    cfg2 = parse_config(tiny_config(training={"n_steps": 2}))
    ts2 = runner.build_training_set(cfg2, model)
    assert ts2.mask.sum() == ts2.n_pairs * 2  # per-step counting measures all


def test_run_json_float_format(tmp_path, capsys):
    cfg_path = write_config(tmp_path, tiny_config())
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    capsys.readouterr()
    text = (out / "run.json").read_text()
    match = re.search(r'"final_loss": ([0-9eE+.\-]+)', text)
    assert match is not None
    token = match.group(1)
    assert format(float(token), ".17g") == token

import json
import os
from pathlib import Path

import numpy as np
import pytest

import mirrorflow as mf
from mirrorflow import cli


SMALL_CONFIG = """\
[problem.synthetic]
n_agents = 3
dim = 2
seed = 5

[graph]
kind = "complete"

[dynamics]
steps = 2000
stride = 20

[[baselines]]
kind = "diminishing"

[[baselines]]
kind = "constant"

[stability]
enabled = true

[output]
directory = "{outdir}"
curve_stride = 4
"""


def _write_config(tmp_path, name="exp.toml", outdir=None, text=SMALL_CONFIG):
    outdir = outdir or str(tmp_path / "out")
    path = tmp_path / name
    path.write_text(text.format(outdir=outdir.replace("\\", "/")))
    return path, Path(outdir)


def test_validate_subcommand(tmp_path, capsys):
    config, _ = _write_config(tmp_path)
    assert cli.main(["validate", "--config", str(config)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("config OK ")
    digest = out.split()[-1]
    assert digest == mf.config_hash(mf.load_config(config))


def test_print_defaults_round_trips(capsys):
    assert cli.main(["run", "--print-defaults"]) == 0
    text = capsys.readouterr().out
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    cfg = mf.config_from_dict(tomllib.loads(text))
    assert cfg.n_agents == 5


def test_run_writes_expected_files(tmp_path):
    config, outdir = _write_config(tmp_path)
    assert cli.main(["run", "--config", str(config)]) == 0
    names = sorted(p.name for p in outdir.iterdir())
    assert names == [
        "comparison.csv",
        "metadata.json",
        "stability.json",
        "trajectory_baseline_constant.csv",
        "trajectory_baseline_diminishing.csv",
        "trajectory_integral_feedback.csv",
    ]
    digest = mf.config_hash(mf.load_config(config))

    curves, meta = mf.import_csv(outdir / "comparison.csv")
    assert list(curves) == [
        "integral_feedback", "baseline_diminishing", "baseline_constant"
    ]
    assert meta["config_hash"] == digest
    # curve downsampled by curve_stride
    steps = curves["integral_feedback"].steps
    assert np.all(np.diff(steps) == 4)

    stability = json.loads((outdir / "stability.json").read_text())
    assert stability["certified"] is True
    assert stability["config_hash"] == digest

    metadata = json.loads((outdir / "metadata.json").read_text())
    assert metadata["config_hash"] == digest
    assert metadata["baseline_definition"] == "baseline definition v1"
    run_info = metadata["runs"]["integral_feedback"]
    assert not run_info["diverged"]


def test_run_is_bitwise_deterministic(tmp_path):
    config_a, out_a = _write_config(tmp_path, "a.toml", str(tmp_path / "out_a"))
    config_b, out_b = _write_config(tmp_path, "b.toml", str(tmp_path / "out_b"))
    assert cli.main(["run", "--config", str(config_a)]) == 0
    assert cli.main(["run", "--config", str(config_b)]) == 0
    for name in sorted(p.name for p in out_a.iterdir()):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_run_validate_only_writes_nothing(tmp_path):
    config, outdir = _write_config(tmp_path)
    assert cli.main(["run", "--config", str(config), "--validate-only"]) == 0
    assert not outdir.exists()


def test_out_flag_overrides_directory(tmp_path):
    config, _ = _write_config(tmp_path)
    override = tmp_path / "elsewhere"
    assert cli.main(["run", "--config", str(config), "--out", str(override)]) == 0
    assert (override / "comparison.csv").exists()


def test_seed_flag_changes_instance(tmp_path):
    config, outdir = _write_config(tmp_path)
    assert cli.main(["stability", "--config", str(config)]) == 0
    first = json.loads((outdir / "stability.json").read_text())
    assert cli.main(["stability", "--config", str(config), "--seed", "99"]) == 0
    second = json.loads((outdir / "stability.json").read_text())
    assert first["config_hash"] != second["config_hash"]
    assert first["certified"] and second["certified"]


def test_missing_config_exits_2(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "nope.toml")]) == 2
    assert "error" in capsys.readouterr().err.lower()


def test_unknown_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(
        "[problem.synthetic]\nn_agents = 3\ndim = 2\nseed = 1\n"
        "[dynamics]\nsteps = 10\nwarp = 9\n"
    )
    assert cli.main(["run", "--config", str(path)]) == 2


def test_missing_dataset_exits_2_without_outputs(tmp_path):
    outdir = tmp_path / "out"
    path = tmp_path / "data.toml"
    path.write_text(
        "[problem.dataset]\npath = \"gone.csv\"\nn_agents = 2\nrows_per_agent = 5\n"
        f"[dynamics]\nsteps = 10\n[output]\ndirectory = \"{outdir.as_posix()}\"\n"
    )
    assert cli.main(["run", "--config", str(path)]) == 2
    assert not outdir.exists()


def test_divergence_exits_3_with_partial_outputs(tmp_path):
    text = SMALL_CONFIG.replace("[dynamics]\nsteps = 2000\nstride = 20",
                                "[dynamics]\nsteps = 2000\nstride = 20\ndt = 100.0")
    config, outdir = _write_config(tmp_path, text=text)
    assert cli.main(["run", "--config", str(config)]) == 3
    assert (outdir / "trajectory_integral_feedback.csv").exists()
    metadata = json.loads((outdir / "metadata.json").read_text())
    assert metadata["runs"]["integral_feedback"]["diverged"] is True


def test_oracle_subcommand(tmp_path):
    config, outdir = _write_config(tmp_path)
    assert cli.main(["oracle", "--config", str(config)]) == 0
    payload = json.loads((outdir / "oracle.json").read_text())
    assert payload["gradient_check_passed"] is True
    assert payload["gradient_norm"] < payload["gradient_threshold"]
    assert (outdir / "centralized.csv").exists()
    cfg = mf.load_config(config)
    x_star = mf.closed_form_optimum(mf.construct_cost_set(cfg))
    np.testing.assert_allclose(payload["optimum"], x_star, atol=1e-12)


def test_log_env_smoke(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MIRRORFLOW_LOG", "debug")
    config, _ = _write_config(tmp_path)
    assert cli.main(["validate", "--config", str(config)]) == 0


def test_entry_point_is_wired():
    import importlib.metadata as md

    entry = [
        ep for ep in md.entry_points(group="console_scripts")
        if ep.name == "mirrorflow"
    ]
    assert entry and entry[0].value == "mirrorflow.cli:main"

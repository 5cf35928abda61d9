import importlib.util
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import pytest

import logger
from harness import ExperimentConfig, Method

CLI_PATH = Path(__file__).resolve().parents[1] / "ToyETO" / "ToyETO.py"


@pytest.fixture(scope="module")
def cli():
    spec = importlib.util.spec_from_file_location("toyeto_cli", CLI_PATH)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def invoke(cli, monkeypatch, capsys, *args):
    """runs the cli entry point and returns the exit code and the last JSON line on stdout"""
    monkeypatch.setattr(sys, "argv", ["toyeto", *args])

    with pytest.raises(SystemExit) as caught:
        cli.main()

    lines = [line for line in capsys.readouterr().out.splitlines() if line.startswith("{")]
    return caught.value.code, json.loads(lines[-1]) if lines else None


@pytest.fixture
def config_file(tmp_path):
    config = ExperimentConfig(
        env="toyshop",
        method=Method.SFT,
        n_train=3,
        n_test_seen=2,
        n_test_unseen=2,
        embed_dim=4,
        window=8,
        hidden=8,
        sft_epochs=1,
        sft_batch_size=2,
        output_dir=str(tmp_path / "out"),
    )
    return config.save(tmp_path / "config.json"), config


def test_unknown_environment_is_a_json_error(cli, monkeypatch, capsys):
    code, output = invoke(cli, monkeypatch, capsys, "gen-data", "--env", "toyfarm")

    assert code == 1
    assert output["error"] == "ConfigError"
    assert "toyfarm" in output["message"]


def test_unknown_method_and_repeated_seeds_are_rejected(cli, monkeypatch, capsys):
    code, output = invoke(cli, monkeypatch, capsys, "run", "--method", "dagger")
    assert (code, output["error"]) == (1, "ConfigError")

    code, output = invoke(cli, monkeypatch, capsys, "run", "--seed", "2", "--seed", "2")
    assert (code, output["error"]) == (1, "ConfigError")


def test_missing_config_file_is_rejected(cli, monkeypatch, capsys, tmp_path):
    code, output = invoke(cli, monkeypatch, capsys, "run", "--config", str(tmp_path / "missing.json"))

    assert code == 1
    assert output["error"] == "ConfigError"


def test_gen_data_then_refuses_to_overwrite(cli, monkeypatch, capsys, config_file):
    path, config = config_file

    code, output = invoke(cli, monkeypatch, capsys, "gen-data", "--config", str(path))
    assert code == 0
    assert Path(output["data_dir"]) == config.data_path()

    code, output = invoke(cli, monkeypatch, capsys, "gen-data", "--config", str(path))
    assert (code, output["error"]) == (1, "DataExistsError")

    code, _ = invoke(cli, monkeypatch, capsys, "gen-data", "--config", str(path), "--force")
    assert code == 0


def test_run_without_data_is_a_json_error(cli, monkeypatch, capsys, config_file):
    path, _ = config_file

    code, output = invoke(cli, monkeypatch, capsys, "run", "--config", str(path))

    assert (code, output["error"]) == (1, "ConfigError")


def test_run_eval_and_emit_tables(cli, monkeypatch, capsys, config_file, tmp_path):
    path, config = config_file
    invoke(cli, monkeypatch, capsys, "gen-data", "--config", str(path))

    code, summary = invoke(cli, monkeypatch, capsys, "run", "--config", str(path), "--seed", "0", "--seed", "1")
    assert code == 0
    assert set(summary) == {"seed0", "seed1"}
    assert set(summary["seed0"]) == {"test_seen", "test_unseen"}

    checkpoint = replace(config, seed=1).run_path() / "final.ckpt"
    code, results = invoke(cli, monkeypatch, capsys, "eval", "--config", str(path), "--checkpoint", str(checkpoint))
    assert code == 0
    assert results == summary["seed1"]

    code, written = invoke(
        cli, monkeypatch, capsys, "emit-tables", "--env", "toyshop", "--output", config.output_dir,
        "--tables", str(tmp_path / "tables"),
    )
    assert code == 0
    assert set(written) == {"rewards", "success", "per_seed", "iterations"}
    assert Path(written["rewards"]).is_file()


def test_grad_check_command(cli, monkeypatch, capsys):
    code, worst = invoke(cli, monkeypatch, capsys, "grad-check", "--fixtures", "1")

    assert code == 0
    assert all(error < 1e-4 for error in worst.values())


def test_create_logger_does_not_stack_handlers():
    logger.create_logger("debug", use_color=False)
    log_obj = logger.create_logger("info", use_color=False)

    assert len(log_obj.handlers) == 1
    assert log_obj.level == logging.INFO
    assert logger.get_logger("policy").name == "toyeto.policy"

    with pytest.raises(ValueError):
        logger.create_logger("loud")

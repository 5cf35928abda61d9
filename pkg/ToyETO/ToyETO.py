#!/usr/bin/env python
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import typer

import callbacks
import colors
import harness
import logger
from core import EtoError

app = typer.Typer(add_completion=False)

color_formatter: colors.Color = colors.Color()


def display_input(config: harness.ExperimentConfig, **extra: Any) -> None:
    """Function to print the resolved configuration if the program is run in verbose mode"""
    print(color_formatter.GREEN + "SUCCESS: " + color_formatter.RESET + "Successfully loaded in the user parameters")
    print(color_formatter.BOLD + "Provided Input" + color_formatter.RESET)
    print(color_formatter.BOLD + "~" * 40 + color_formatter.RESET)

    for key, value in {**config.to_dict(), **extra}.items():
        print(color_formatter.BOLD + f"{key}: " + color_formatter.RESET + str(value))

    print(color_formatter.BOLD + "~" * 40 + color_formatter.RESET + "\n")


def load_config(config_file: Optional[str], **overrides: Any) -> harness.ExperimentConfig:
    base = harness.ExperimentConfig.load(config_file) if config_file else harness.ExperimentConfig()
    return base.override(**overrides)


def start(verbose: bool) -> None:
    logger.create_logger(log_level="debug" if verbose else "info")


@app.command("gen-data")
def gen_data(
    config_file: Optional[str] = typer.Option(
        None, "--config", help="Filepath to an experiment configuration JSON file", callback=callbacks.check_config_file
    ),
    env: Optional[str] = typer.Option(None, help="toyshop, toylab or toyhouse", callback=callbacks.check_env),
    n_train: Optional[int] = typer.Option(None, help="Number of training instructions"),
    n_test_seen: Optional[int] = typer.Option(None, help="Number of seen test instructions"),
    n_test_unseen: Optional[int] = typer.Option(None, help="Number of unseen test instructions"),
    data_seed: Optional[int] = typer.Option(None, help="Seed that draws the instruction sets"),
    max_steps: Optional[int] = typer.Option(None, help="Step limit of the environment"),
    output: Optional[str] = typer.Option(
        None, help=f"Output root directory. Defaults to ${harness.OUTPUT_ROOT_VARIABLE} or ./toyeto_output"
    ),
    force: bool = typer.Option(False, "--force", help="Overwrite existing data", is_flag=True),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Optional Flag to run the program in verbose mode", is_flag=True),
) -> None:
    """Writes the instruction splits and the oracle expert trajectories of an environment"""
    start(verbose)

    config = load_config(
        config_file,
        env=env,
        n_train=n_train,
        n_test_seen=n_test_seen,
        n_test_unseen=n_test_unseen,
        data_seed=data_seed,
        max_steps=max_steps,
        output_dir=output,
    )

    if verbose:
        display_input(config, force=force)

    directory: Path = harness.gen_data(config, force=force)

    print(json.dumps({"data_dir": str(directory)}))


@app.command("run")
def run(
    config_file: Optional[str] = typer.Option(
        None, "--config", help="Filepath to an experiment configuration JSON file", callback=callbacks.check_config_file
    ),
    env: Optional[str] = typer.Option(None, help="toyshop, toylab or toyhouse", callback=callbacks.check_env),
    method: Optional[str] = typer.Option(None, help="Training method to run", callback=callbacks.check_method),
    seeds: List[int] = typer.Option(
        None, "--seed", help="Master seeds. The format should be '--seed 0 --seed 1'", callback=callbacks.check_seeds
    ),
    cores: int = typer.Option(1, help="Number of cpu cores to be used during the programs execution"),
    scale: Optional[str] = typer.Option(None, help="Learning rate scale, desk or pretrained"),
    iterations: Optional[int] = typer.Option(None, help="Number of ETO iterations"),
    beta: Optional[float] = typer.Option(None, help="KL weight of the preference losses"),
    sft_epochs: Optional[int] = typer.Option(None, help="Epochs of behavioral cloning"),
    dpo_epochs: Optional[int] = typer.Option(None, help="Epochs of every ETO training phase"),
    accumulate_pairs: Optional[bool] = typer.Option(None, help="Train every iteration on all pairs found so far"),
    dedupe_pairs: Optional[bool] = typer.Option(None, help="Drop repeated failure-success pairs"),
    output: Optional[str] = typer.Option(
        None, help=f"Output root directory. Defaults to ${harness.OUTPUT_ROOT_VARIABLE} or ./toyeto_output"
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Optional Flag to run the program in verbose mode", is_flag=True),
) -> None:
    """Runs one method on generated data for every seed and writes report.json per seed"""
    start(verbose)

    config = load_config(
        config_file,
        env=env,
        method=method,
        scale=scale,
        iterations=iterations,
        beta=beta,
        sft_epochs=sft_epochs,
        dpo_epochs=dpo_epochs,
        accumulate_pairs=accumulate_pairs,
        dedupe_pairs=dedupe_pairs,
        output_dir=output,
        cores=cores,
        verbose=verbose,
    )

    if verbose:
        display_input(config.resolved(), seeds=seeds)

    reports = harness.run_seeds(config, seeds, cores=cores if len(seeds) > 1 else 1)

    summary: Dict[str, Any] = {
        f"seed{report.seed}": {split: metrics.summary() for split, metrics in report.splits.items()}
        for report in reports
    }
    print(json.dumps(summary, sort_keys=True))


@app.command("eval")
def evaluate(
    checkpoint: str = typer.Option(..., help="Filepath to a policy checkpoint"),
    config_file: Optional[str] = typer.Option(
        None, "--config", help="Filepath to an experiment configuration JSON file", callback=callbacks.check_config_file
    ),
    env: Optional[str] = typer.Option(None, help="toyshop, toylab or toyhouse", callback=callbacks.check_env),
    output: Optional[str] = typer.Option(None, help="Output root directory the data was generated in"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Optional Flag to run the program in verbose mode", is_flag=True),
) -> None:
    """Greedily re-evaluates a checkpoint on both test splits"""
    start(verbose)

    config = load_config(config_file, env=env, output_dir=output)

    print(json.dumps(harness.evaluate_checkpoint(config, Path(checkpoint)), sort_keys=True))


@app.command("emit-tables")
def emit_tables(
    env: str = typer.Option("toyshop", help="Environment whose reports are collected", callback=callbacks.check_env),
    reports: List[str] = typer.Option(
        None, "--report", help="report.json files. Defaults to every report of the environment under the output root"
    ),
    output: Optional[str] = typer.Option(None, help="Output root directory"),
    tables: Optional[str] = typer.Option(None, help="Directory for the csv files. Defaults to <output>/tables"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Optional Flag to run the program in verbose mode", is_flag=True),
) -> None:
    """Writes the method x split tables, iteration curves and reward-vs-step curves as csv files"""
    start(verbose)

    root: Path = harness.output_root(output)
    paths: List[Path] = [Path(report) for report in reports] if reports else sorted(root.glob(f"{env}/*/seed*/report.json"))

    written = harness.emit_tables([harness.MetricsReport.load(path) for path in paths], Path(tables) if tables else root / "tables")

    print(json.dumps({name: str(path) for name, path in written.items()}, sort_keys=True))


@app.command("grad-check")
def grad_check(
    env: str = typer.Option("toyshop", help="Environment the fixtures come from", callback=callbacks.check_env),
    fixtures: int = typer.Option(3, help="Number of random fixtures per loss"),
    seed: int = typer.Option(0, help="Seed of the fixtures"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Optional Flag to run the program in verbose mode", is_flag=True),
) -> None:
    """Compares the analytic gradients of the training losses with central finite differences"""
    start(verbose)

    print(json.dumps(harness.run_grad_checks(env, fixtures, seed), sort_keys=True))


def main() -> None:
    """runs the cli. Package errors are printed as a JSON document and exit with code 1"""
    try:
        code = app(standalone_mode=False)
    except EtoError as error:
        print(json.dumps({"error": type(error).__name__, "message": error.message}))
        sys.exit(1)
    except click.ClickException as error:
        error.show()
        sys.exit(error.exit_code)
    except click.exceptions.Abort:
        sys.exit(1)

    sys.exit(code or 0)


if __name__ == "__main__":
    main()

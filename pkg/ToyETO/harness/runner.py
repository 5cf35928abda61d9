import json
import time
from dataclasses import replace
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from algorithms import (
    SFT_STAGE,
    TrainingAbortedError,
    behavioral_cloning,
    child_seed,
    eto,
    pg_baseline,
    rft,
    self_play,
)
from core import dump_trajectories
from logger import get_logger
from policy import PolicyParams, init_params, load_checkpoint, save_checkpoint

from .config import ETO_VARIANTS, SELF_PLAY_MODES, ExperimentConfig, Method
from .data import Dataset, load_dataset
from .metrics import TEST_SPLITS, MetricsReport, SplitMetrics, oracle_curves, policy_trajectories, score_trajectories

logger = get_logger("harness")

# fields that change how a run executes but never what it computes
RUNTIME_FIELDS = ("cores", "verbose", "data_dir", "output_dir")
INIT_STAGE: int = 0


def reportable(config: ExperimentConfig) -> Dict[str, Any]:
    record: Dict[str, Any] = config.to_dict()
    for key in RUNTIME_FIELDS:
        record.pop(key)
    return record


class Evaluator:
    """evaluates a policy on both test splits and keeps the iteration rows of the report"""

    def __init__(self, config: ExperimentConfig, dataset: Dataset, run_dir: Optional[Path] = None) -> None:
        self.config: ExperimentConfig = config
        self.dataset: Dataset = dataset
        self.run_dir: Optional[Path] = run_dir
        self.rows: List[Dict[str, Any]] = []
        self.latest: Dict[str, SplitMetrics] = {}

    def evaluate(self, params: PolicyParams, n_samples: int = 1) -> Dict[str, SplitMetrics]:
        results: Dict[str, SplitMetrics] = {}

        for split in TEST_SPLITS:
            trajectories = policy_trajectories(
                params,
                self.dataset.spec,
                self.dataset.split(split),
                seed=self.config.seed,
                n_samples=n_samples,
                cores=self.config.cores,
            )
            results[split] = score_trajectories(self.dataset.spec, split, trajectories)

            if self.run_dir is not None:
                dump_trajectories(self.run_dir / f"{split}.rollouts.jsonl", trajectories, self.dataset.spec.vocab)

        return results

    def __call__(self, iteration: int, params: PolicyParams, n_samples: int = 1) -> None:
        self.latest = self.evaluate(params, n_samples)
        row: Dict[str, Any] = {"iteration": iteration}

        for split, metrics in self.latest.items():
            row[split] = metrics.summary()
            logger.info(
                f"iteration {iteration} {split}: average reward {metrics.average_reward:.4f}, "
                f"success rate {metrics.success_rate:.4f}"
            )

        self.rows.append(row)


def _train(
    config: ExperimentConfig, dataset: Dataset, params: PolicyParams, evaluator: Evaluator, run_dir: Path
) -> Dict[str, Any]:
    """runs the configured method, evaluating after every phase. Returns the training report"""
    vocab = dataset.spec.vocab
    method: Method = config.method

    if method is Method.UNTUNED:
        evaluator(0, params)
        return {}

    if method in SELF_PLAY_MODES:
        evaluator(0, params)
        params, report = self_play(
            params, dataset.train, dataset.spec, config.self_play_config(), SELF_PLAY_MODES[method]
        )
        evaluator(1, params)
        save_checkpoint(run_dir / "final.ckpt", params, vocab)
        return report.to_dict()

    if method in ETO_VARIANTS:
        params, report = eto(params, dataset.experts, dataset.spec, config.eto_config(), evaluate=evaluator)
        save_checkpoint(run_dir / "final.ckpt", params, vocab)
        return report.to_dict()

    params, bc_report = behavioral_cloning(
        params,
        dataset.experts,
        vocab,
        config.train_config("sft"),
        seed=child_seed(config.seed, SFT_STAGE),
        verbose=config.verbose,
    )
    save_checkpoint(run_dir / "bc.ckpt", params, vocab)
    evaluator(0, params)
    training: Dict[str, Any] = {"bc": bc_report.to_dict()}

    if method is Method.RFT:
        params, report = rft(params, dataset.experts, dataset.spec, config.rft_config())
        training["rft"] = report.to_dict()
        evaluator(1, params)
    elif method is Method.PG:
        params, report = pg_baseline(
            params, [expert.instruction for expert in dataset.experts], dataset.spec, config.pg_config()
        )
        training["pg"] = report.to_dict()
        evaluator(1, params)
    elif method is Method.BEST_OF_N:
        evaluator(1, params, n_samples=config.best_of_n)

    save_checkpoint(run_dir / "final.ckpt", params, vocab)

    return training


def run(config: ExperimentConfig) -> MetricsReport:
    """Function that executes one (environment, method, seed) experiment and persists its outputs

    Parameters

    config : ExperimentConfig
        experiment to run. The generated data has to exist

    Returns

    MetricsReport
        returns the report that was written to report.json. Wall clock time goes to timing.json
        so the report is bit identical across reruns
    """
    started: float = time.perf_counter()

    config = config.resolved()
    dataset: Dataset = load_dataset(config)
    run_dir: Path = config.run_path()
    run_dir.mkdir(parents=True, exist_ok=True)

    config.save(run_dir / "config.json")
    logger.info(f"Running {config.method.value} on {config.env} with seed {config.seed}, writing to {run_dir}")

    arch = config.architecture(len(dataset.spec.vocab))
    params: PolicyParams = init_params(arch, child_seed(config.seed, INIT_STAGE))

    evaluator = Evaluator(config, dataset, run_dir)
    report = MetricsReport(env=config.env, method=config.method.value, seed=config.seed, config=reportable(config))

    try:
        report.training = _train(config, dataset, params, evaluator, run_dir)
    except TrainingAbortedError as error:
        report.aborted = error.message
        if error.last_params is not None:
            save_checkpoint(run_dir / "last_good.ckpt", error.last_params, dataset.spec.vocab)
        raise
    finally:
        report.iterations = evaluator.rows
        report.splits = evaluator.latest
        report.oracle_curves = {split: oracle_curves(dataset.spec, dataset.split(split)) for split in TEST_SPLITS}
        report.save(run_dir / "report.json")
        (run_dir / "timing.json").write_text(
            json.dumps({"wall_clock_seconds": time.perf_counter() - started}) + "\n", encoding="utf-8"
        )

    return report


def run_seeds(config: ExperimentConfig, seeds: Sequence[int], cores: int = 1) -> List[MetricsReport]:
    """Function that runs the same experiment for several master seeds

    Parameters

    config : ExperimentConfig
        experiment to repeat

    seeds : Sequence[int]
        master seeds. Each writes to <output>/<env>/<method>/seed<k>/

    cores : int
        number of seeds run at the same time. Each seed then runs its rollouts serially

    Returns

    List[MetricsReport]
        returns the reports in seed order
    """
    configs: List[ExperimentConfig] = [
        replace(config, seed=int(seed), cores=1 if cores > 1 else config.cores) for seed in seeds
    ]

    if cores <= 1 or len(configs) < 2:
        return [run(seed_config) for seed_config in configs]

    logger.info(f"Parallelizing {len(configs)} seeds to {cores} cpu cores")

    with Pool(cores) as pool:
        return pool.map(run, configs)


def evaluate_checkpoint(config: ExperimentConfig, checkpoint: Path) -> Dict[str, Any]:
    """re-evaluates a saved policy greedily on both test splits and writes eval.json next to it"""
    config = config.resolved()
    dataset: Dataset = load_dataset(config)

    params: PolicyParams = load_checkpoint(checkpoint, dataset.spec.vocab)

    evaluator = Evaluator(config, dataset)
    results: Dict[str, Any] = {split: metrics.summary() for split, metrics in evaluator.evaluate(params).items()}

    output: Path = Path(checkpoint).with_name("eval.json")
    output.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    return results

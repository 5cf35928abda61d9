import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import ActionPair, Trajectory, TrajectoryPair, dedupe_pairs
from envs import EnvSpec
from logger import get_logger
from losses import DpoConfig, dpo_loss, stepwise_dpo_loss
from policy import PolicyParams

from .cloning import behavioral_cloning
from .config import DPO_STAGE, SFT_STAGE, EtoConfig, EtoVariant, child_seed
from .exploration import explore_and_pair, explore_steps
from .trainer import TrainReport, fit, minibatches, train

logger = get_logger("algorithms")

Evaluate = Callable[[int, PolicyParams], Any]


@dataclass
class TaggedBatch:
    """a minibatch of either trajectory pairs or action pairs"""

    kind: str
    items: List[Any]

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class IterationReport:
    iteration: int
    n_pairs: int = 0
    n_step_pairs: int = 0
    # dpo loss of the first batch. theta equals the reference there, so this is ln 2
    first_loss: Optional[float] = None
    rollout_rewards: Dict[float, int] = field(default_factory=dict)
    train: Optional[TrainReport] = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "n_pairs": self.n_pairs,
            "n_step_pairs": self.n_step_pairs,
            "first_loss": self.first_loss,
            "rollout_rewards": {str(reward): count for reward, count in sorted(self.rollout_rewards.items())},
            "train": None if self.train is None else self.train.to_dict(),
        }


@dataclass
class EtoReport:
    bc: TrainReport
    iterations: List[IterationReport] = field(default_factory=list)
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {
            "bc": self.bc.to_dict(),
            "iterations": [iteration.to_dict() for iteration in self.iterations],
            "stopped_early": self.stopped_early,
        }


def _interleave(first: List[Any], second: List[Any]) -> List[Any]:
    merged: List[Any] = []
    for index in range(max(len(first), len(second))):
        merged.extend(batches[index] for batches in (first, second) if index < len(batches))
    return merged


def _train_iteration(
    params: PolicyParams,
    pairs: List[TrajectoryPair],
    experts: Sequence[Trajectory],
    spec: EnvSpec,
    cfg: EtoConfig,
    iteration: int,
    report: IterationReport,
) -> PolicyParams:
    reference: PolicyParams = params
    vocab = spec.vocab
    trajectory_cfg = DpoConfig(cfg.beta, reference)
    step_cfg = DpoConfig(cfg.step_beta, reference)
    seed: int = child_seed(cfg.seed, DPO_STAGE, iteration)
    label: str = f"eto-{cfg.variant.value}-{iteration}"

    if cfg.variant is EtoVariant.TRAJECTORY:
        params, report.train = fit(
            params,
            pairs,
            lambda current, batch: dpo_loss(current, trajectory_cfg, batch, vocab),
            cfg.dpo,
            seed=seed,
            label=label,
            verbose=cfg.verbose,
        )
        return params

    def step_pairs(epoch: int) -> List[ActionPair]:
        found: List[ActionPair] = explore_steps(
            reference, experts, spec, cfg.explore_temperature, cfg.seed, iteration, epoch, cfg.cores
        )
        report.n_step_pairs += len(found)
        return found

    def batch_loss(current: PolicyParams, batch: TaggedBatch) -> Tuple[float, np.ndarray]:
        if batch.kind == "trajectory":
            return dpo_loss(current, trajectory_cfg, batch.items, vocab)
        return stepwise_dpo_loss(current, step_cfg, batch.items, vocab)

    if cfg.variant is EtoVariant.STEP:
        train_cfg = cfg.step

        def epoch_batches(epoch: int, rng: np.random.Generator, current: PolicyParams) -> List[TaggedBatch]:
            return [TaggedBatch("step", items) for items in minibatches(step_pairs(epoch), train_cfg.batch_size, rng)]

        max_batches: int = math.ceil(len(experts) / train_cfg.batch_size)
    else:
        train_cfg = cfg.dpo

        def epoch_batches(epoch: int, rng: np.random.Generator, current: PolicyParams) -> List[TaggedBatch]:
            trajectory_batches = [
                TaggedBatch("trajectory", items) for items in minibatches(pairs, train_cfg.batch_size, rng)
            ]
            action_batches = [
                TaggedBatch("step", items) for items in minibatches(step_pairs(epoch), train_cfg.batch_size, rng)
            ]
            # 1:1, trajectory batch first
            return _interleave(trajectory_batches, action_batches)

        max_batches = math.ceil(len(pairs) / train_cfg.batch_size) + math.ceil(len(experts) / train_cfg.batch_size)

    params, report.train = train(
        params, epoch_batches, batch_loss, train_cfg, max_batches, seed=seed, label=label, verbose=cfg.verbose
    )

    return params


def eto(
    params: PolicyParams,
    experts: Sequence[Trajectory],
    spec: EnvSpec,
    cfg: EtoConfig,
    evaluate: Optional[Evaluate] = None,
) -> Tuple[PolicyParams, EtoReport]:
    """Function that runs behavioral cloning followed by the exploration-training iterations

    Parameters

    params : PolicyParams
        initial parameters

    experts : Sequence[Trajectory]
        expert dataset, one trajectory per training instruction

    spec : EnvSpec
        environment of the dataset

    cfg : EtoConfig
        every knob of the loop

    evaluate : Optional[Evaluate]
        called with (iteration, params) after BC (iteration 0) and after every iteration

    Returns

    Tuple[PolicyParams, EtoReport]
        returns the final policy and the report. The loop stops early when an iteration finds no pair
    """
    params, bc_report = behavioral_cloning(
        params, experts, spec.vocab, cfg.sft, seed=child_seed(cfg.seed, SFT_STAGE), verbose=cfg.verbose
    )
    report = EtoReport(bc=bc_report)

    if evaluate is not None:
        evaluate(0, params)

    history: List[TrajectoryPair] = []

    for iteration in range(1, cfg.iterations + 1):
        logger.info(f"ETO iteration {iteration}/{cfg.iterations} ({cfg.variant.value})")

        iteration_report = IterationReport(iteration=iteration)
        report.iterations.append(iteration_report)

        pairs: List[TrajectoryPair] = []

        if cfg.variant is not EtoVariant.STEP:
            explored = explore_and_pair(
                params,
                experts,
                spec,
                temperature=cfg.explore_temperature,
                rollouts_per_instruction=cfg.rollouts_per_instruction,
                seed=cfg.seed,
                iteration=iteration,
                cores=cfg.cores,
            )
            iteration_report.rollout_rewards = explored.reward_counts

            history.extend(explored.pairs)
            pairs = list(history) if cfg.accumulate_pairs else explored.pairs

            if cfg.dedupe_pairs:
                pairs = dedupe_pairs(pairs)

            iteration_report.n_pairs = len(pairs)

            if not pairs:
                logger.warning(f"Iteration {iteration} found no failure-success pair, stopping early")
                report.stopped_early = True
                break

        params = _train_iteration(params, pairs, experts, spec, cfg, iteration, iteration_report)
        iteration_report.first_loss = iteration_report.train.first_loss

        epochs: int = cfg.step.epochs if cfg.variant is EtoVariant.STEP else cfg.dpo.epochs

        if iteration_report.train.n_steps == 0 and epochs > 0:
            logger.warning(f"Iteration {iteration} had nothing to train on, stopping early")
            report.stopped_early = True
            break

        if evaluate is not None:
            evaluate(iteration, params)

    return params, report

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core import Instruction, Trajectory, TrajectoryPair, flatten
from envs import EnvSpec, EnvironmentStepError
from logger import get_logger
from losses import DpoConfig, clip_by_global_norm, dpo_loss
from policy import InvalidInputError, PolicyParams, RolloutConfig, batch_logprobs, token_kl, weighted_grad

from .cloning import supervised_finetune
from .config import (
    DPO_STAGE,
    PG_STAGE,
    RFT_STAGE,
    SELF_PLAY_STAGE,
    SFT_STAGE,
    PgConfig,
    RftConfig,
    SelfPlayConfig,
    SelfPlayMode,
    child_seed,
)
from .exploration import collect_rollouts
from .trainer import TrainReport, fit, minibatches, train

logger = get_logger("algorithms")


def augment_dataset(
    experts: Sequence[Trajectory], rollouts: Sequence[Trajectory], threshold: float
) -> List[Trajectory]:
    """the expert set followed by every rollout whose reward reaches the threshold"""
    return [*experts, *(trajectory for trajectory in rollouts if trajectory.reward >= threshold)]


def _sample_groups(
    params: PolicyParams,
    instructions: Sequence[Instruction],
    spec: EnvSpec,
    k: int,
    temperature: float,
    seed: int,
    cores: int,
) -> List[List[Trajectory]]:
    """k seeded rollouts per instruction, grouped by instruction"""
    requests = [
        (instruction, RolloutConfig(temperature=temperature, seed=child_seed(seed, index, sample)), ())
        for index, instruction in enumerate(instructions)
        for sample in range(k)
    ]

    results: List[Optional[Trajectory]] = collect_rollouts(params, spec, requests, cores)

    return [
        [trajectory for trajectory in results[index * k:(index + 1) * k] if trajectory is not None]
        for index in range(len(instructions))
    ]


@dataclass
class RftReport:
    n_experts: int
    n_added: int
    sft: TrainReport
    augmented: List[Trajectory] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"n_experts": self.n_experts, "n_added": self.n_added, "sft": self.sft.to_dict()}


def rft(
    params: PolicyParams, experts: Sequence[Trajectory], spec: EnvSpec, cfg: RftConfig
) -> Tuple[PolicyParams, RftReport]:
    """Function that augments the expert set with the policy's own successes and fine-tunes on it

    Parameters

    params : PolicyParams
        policy after behavioral cloning

    experts : Sequence[Trajectory]
        expert dataset

    spec : EnvSpec
        environment of the dataset

    cfg : RftConfig
        samples per instruction, temperature, success threshold and SFT settings

    Returns

    Tuple[PolicyParams, RftReport]
        returns the fine-tuned policy and a report holding the augmented dataset
    """
    groups = _sample_groups(
        params,
        [expert.instruction for expert in experts],
        spec,
        cfg.k,
        cfg.temperature,
        child_seed(cfg.seed, RFT_STAGE),
        cfg.cores,
    )

    augmented: List[Trajectory] = augment_dataset(
        experts, [trajectory for group in groups for trajectory in group], cfg.threshold
    )
    n_added: int = len(augmented) - len(experts)

    if n_added == 0:
        logger.warning(f"No rollout reached the threshold {cfg.threshold}, RFT falls back to SFT on the experts")
    else:
        logger.info(f"RFT added {n_added} rollouts with reward >= {cfg.threshold} to {len(experts)} experts")

    params, sft_report = supervised_finetune(
        params, augmented, spec.vocab, cfg.sft, seed=child_seed(cfg.seed, RFT_STAGE, SFT_STAGE), label="rft",
        verbose=cfg.verbose,
    )

    return params, RftReport(len(experts), n_added, sft_report, augmented)


def best_of_n(
    params: PolicyParams,
    spec: EnvSpec,
    instruction: Instruction,
    n: int = 10,
    seed: int = 0,
    temperature: float = 1.0,
    cores: int = 1,
) -> Trajectory:
    """Function that keeps the best of n sampled rollouts

    Parameters

    params : PolicyParams
        policy to sample from

    spec : EnvSpec
        environment of the instruction

    instruction : Instruction
        task

    n : int
        number of samples. Sample i always uses the seed derived from (seed, i), so a larger n
        extends the same stream

    seed : int
        seed of the stream

    temperature : float
        sampling temperature

    cores : int
        worker processes

    Returns

    Trajectory
        returns the highest reward sample. Ties go to the lowest sample index
    """
    if n < 1:
        raise InvalidInputError(f"Best-of-N needs at least one sample, not {n}")

    requests = [
        (instruction, RolloutConfig(temperature=temperature, seed=child_seed(seed, index)), ()) for index in range(n)
    ]
    samples: List[Trajectory] = [
        trajectory for trajectory in collect_rollouts(params, spec, requests, cores) if trajectory is not None
    ]

    if not samples:
        raise EnvironmentStepError(f"Every sample for {instruction.id} was refused by the environment")

    best: Trajectory = samples[0]
    for trajectory in samples[1:]:
        if trajectory.reward > best.reward:
            best = trajectory

    return best


@dataclass
class PgReport:
    train: TrainReport
    batch_rewards: List[float] = field(default_factory=list)
    batch_kl: List[float] = field(default_factory=list)
    grad_norms: List[float] = field(default_factory=list)
    # batches whose rollouts were all refused by the environment
    skipped_batches: int = 0

    def to_dict(self) -> dict:
        return {
            "train": self.train.to_dict(),
            "batch_rewards": list(self.batch_rewards),
            "batch_kl": list(self.batch_kl),
            "grad_norms": list(self.grad_norms),
            "skipped_batches": self.skipped_batches,
        }


def pg_baseline(
    params: PolicyParams, instructions: Sequence[Instruction], spec: EnvSpec, cfg: PgConfig
) -> Tuple[PolicyParams, PgReport]:
    """Function that does KL regularized score function gradient ascent on the final reward

    Parameters

    params : PolicyParams
        policy after behavioral cloning. It also becomes the frozen reference

    instructions : Sequence[Instruction]
        training instructions

    spec : EnvSpec
        environment of the instructions

    cfg : PgConfig
        training settings, beta, clipping norm and sampling temperature

    Returns

    Tuple[PolicyParams, PgReport]
        returns the trained policy and the reward, KL and gradient norm of every batch
    """
    reference: PolicyParams = params
    vocab = spec.vocab
    instructions = list(instructions)
    seen_rewards: List[float] = []
    pg_report = PgReport(train=TrainReport(label="pg"))

    def batch_loss(current: PolicyParams, batch: List[Instruction]) -> Tuple[float, np.ndarray]:
        batch_index: int = len(pg_report.batch_rewards) + pg_report.skipped_batches
        stream: int = child_seed(cfg.seed, PG_STAGE, batch_index)
        groups = _sample_groups(current, batch, spec, 1, cfg.temperature, stream, cfg.cores)
        trajectories: List[Trajectory] = [group[0] for group in groups if group]

        if not trajectories:
            pg_report.skipped_batches += 1
            logger.warning(f"pg: every rollout of batch {batch_index} was refused, skipping it")
            return 0.0, np.zeros(current.arch.n_params)

        rewards: np.ndarray = np.asarray([trajectory.reward for trajectory in trajectories])
        # running mean over earlier batches, the first batch centers on itself
        baseline: float = float(np.mean(seen_rewards)) if seen_rewards else float(rewards.mean())
        seen_rewards.extend(rewards.tolist())

        flats = [flatten(trajectory, vocab) for trajectory in trajectories]
        size: int = len(flats)

        logprobs, cache = batch_logprobs(current, flats)
        kl, kl_grad = token_kl(current, reference, flats)

        advantage: np.ndarray = rewards - baseline
        loss: float = float(-(advantage * logprobs).sum() / size + cfg.beta * kl.sum() / size)

        grad: np.ndarray = weighted_grad(current, cache, -advantage / size) + (cfg.beta / size) * kl_grad
        grad, norm = clip_by_global_norm(grad, cfg.max_norm)

        pg_report.batch_rewards.append(float(rewards.mean()))
        pg_report.batch_kl.append(float(kl.mean()))
        pg_report.grad_norms.append(norm)

        return loss, grad

    params, pg_report.train = train(
        params,
        lambda epoch, rng, current: minibatches(instructions, cfg.train.batch_size, rng),
        batch_loss,
        cfg.train,
        max_batches_per_epoch=math.ceil(len(instructions) / cfg.train.batch_size),
        seed=child_seed(cfg.seed, PG_STAGE),
        label="pg",
        verbose=cfg.verbose,
    )

    return params, pg_report


def self_play_pairs(group: Sequence[Trajectory]) -> List[TrajectoryPair]:
    """pairs the best rollout of one instruction (lowest index on ties) with every strictly worse one"""
    if not group:
        return []

    best: Trajectory = group[0]
    for trajectory in group[1:]:
        if trajectory.reward > best.reward:
            best = trajectory

    return [
        TrajectoryPair(best.instruction, winner=best, loser=trajectory)
        for trajectory in group
        if trajectory.reward < best.reward
    ]


@dataclass
class SelfPlayReport:
    mode: SelfPlayMode
    n_rft_added: int = 0
    n_pairs: int = 0
    sft: Optional[TrainReport] = None
    dpo: Optional[TrainReport] = None
    empty_stages: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n_rft_added": self.n_rft_added,
            "n_pairs": self.n_pairs,
            "sft": None if self.sft is None else self.sft.to_dict(),
            "dpo": None if self.dpo is None else self.dpo.to_dict(),
            "empty_stages": list(self.empty_stages),
        }


def self_play(
    params: PolicyParams,
    instructions: Sequence[Instruction],
    spec: EnvSpec,
    cfg: SelfPlayConfig,
    mode: SelfPlayMode,
) -> Tuple[PolicyParams, SelfPlayReport]:
    """Function that learns from the policy's own samples without any expert trajectory

    Parameters

    params : PolicyParams
        untuned starting parameters. Behavioral cloning is skipped

    instructions : Sequence[Instruction]
        training instructions

    spec : EnvSpec
        environment of the instructions

    cfg : SelfPlayConfig
        samples per instruction, temperature, threshold, beta and training settings

    mode : SelfPlayMode
        eto_only, rft_only or rft_then_eto

    Returns

    Tuple[PolicyParams, SelfPlayReport]
        returns the trained policy. A stage with nothing to train on leaves the parameters as they were
    """
    mode = SelfPlayMode(mode)
    report = SelfPlayReport(mode=mode)
    vocab = spec.vocab

    if mode in (SelfPlayMode.RFT_ONLY, SelfPlayMode.RFT_THEN_ETO):
        groups = _sample_groups(
            params, instructions, spec, cfg.k, cfg.temperature, child_seed(cfg.seed, SELF_PLAY_STAGE, RFT_STAGE),
            cfg.cores,
        )
        kept: List[Trajectory] = augment_dataset([], [trajectory for group in groups for trajectory in group], cfg.threshold)
        report.n_rft_added = len(kept)

        if kept:
            params, report.sft = supervised_finetune(
                params, kept, vocab, cfg.sft, seed=child_seed(cfg.seed, SELF_PLAY_STAGE, SFT_STAGE),
                label="self-play-rft", verbose=cfg.verbose,
            )
        else:
            logger.warning(f"No self-play sample reached the threshold {cfg.threshold}")
            report.empty_stages.append("rft")

    if mode in (SelfPlayMode.ETO_ONLY, SelfPlayMode.RFT_THEN_ETO):
        groups = _sample_groups(
            params, instructions, spec, cfg.k, cfg.temperature, child_seed(cfg.seed, SELF_PLAY_STAGE, DPO_STAGE),
            cfg.cores,
        )
        pairs: List[TrajectoryPair] = [pair for group in groups for pair in self_play_pairs(group)]
        report.n_pairs = len(pairs)

        if pairs:
            dpo_cfg = DpoConfig(cfg.beta, params)
            params, report.dpo = fit(
                params,
                pairs,
                lambda current, batch: dpo_loss(current, dpo_cfg, batch, vocab),
                cfg.dpo,
                seed=child_seed(cfg.seed, SELF_PLAY_STAGE, DPO_STAGE),
                label="self-play-eto",
                verbose=cfg.verbose,
            )
        else:
            logger.warning("Every self-play sample tied with the others on its instruction, no pair to train on")
            report.empty_stages.append("eto")

    return params, report

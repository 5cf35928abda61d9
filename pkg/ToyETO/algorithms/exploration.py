from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core import ActionPair, EtoError, Instruction, Step, Trajectory, TrajectoryPair, pair_from_rollout
from envs import EnvSpec, replays_soundly
from logger import get_logger
from policy import PolicyParams, RolloutConfig, rollout

from .config import EXPLORE_STAGE, STEP_STAGE, child_seed

logger = get_logger("algorithms")

RolloutJob = Tuple[PolicyParams, EnvSpec, Instruction, RolloutConfig, Tuple[Step, ...]]


def _rollout_job(job: RolloutJob) -> Optional[Trajectory]:
    params, spec, instruction, cfg, prefix = job

    try:
        return rollout(params, spec, instruction, cfg, prefix=prefix)
    except EtoError as error:
        logger.warning(f"Skipping the rollout for {instruction.id}: {error.message}")
        return None


def collect_rollouts(
    params: PolicyParams,
    spec: EnvSpec,
    requests: Sequence[Tuple[Instruction, RolloutConfig, Sequence[Step]]],
    cores: int = 1,
) -> List[Optional[Trajectory]]:
    """Function that runs many rollouts against one read-only parameter snapshot

    Parameters

    params : PolicyParams
        shared parameters

    spec : EnvSpec
        environment of every instruction

    requests : Sequence[Tuple[Instruction, RolloutConfig, Sequence[Step]]]
        instruction, rollout settings and forced prefix of each rollout

    cores : int
        number of worker processes. Results come back in request order either way

    Returns

    List[Optional[Trajectory]]
        returns one trajectory per request, None where the environment refused the episode
    """
    jobs: List[RolloutJob] = [
        (params, spec, instruction, cfg, tuple(prefix)) for instruction, cfg, prefix in requests
    ]

    if cores <= 1 or len(jobs) < 2:
        return [_rollout_job(job) for job in jobs]

    logger.debug(f"Parallelizing {len(jobs)} rollouts to {cores} cpu cores")

    with Pool(cores) as pool:
        return pool.map(_rollout_job, jobs)


@dataclass
class ExploreResult:
    pairs: List[TrajectoryPair] = field(default_factory=list)
    rollouts: List[Trajectory] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)

    @property
    def reward_counts(self) -> Dict[float, int]:
        counts: Dict[float, int] = {}
        for trajectory in self.rollouts:
            counts[trajectory.reward] = counts.get(trajectory.reward, 0) + 1
        return counts


def explore_and_pair(
    params: PolicyParams,
    experts: Sequence[Trajectory],
    spec: EnvSpec,
    temperature: float = 0.0,
    rollouts_per_instruction: int = 1,
    seed: int = 0,
    iteration: int = 0,
    cores: int = 1,
) -> ExploreResult:
    """Function that rolls the policy out on every training instruction and pairs it against the expert

    Parameters

    params : PolicyParams
        policy to explore with

    experts : Sequence[Trajectory]
        one expert trajectory per training instruction

    spec : EnvSpec
        environment the instructions belong to

    temperature : float
        sampling temperature. 0 explores greedily

    rollouts_per_instruction : int
        rollouts per expert, each paired against the expert on its own

    seed : int
        master seed of the run

    iteration : int
        iteration index, mixed into the rollout seeds

    cores : int
        worker processes for the rollouts

    Returns

    ExploreResult
        returns the emitted pairs in instruction order plus every rollout. Equal rewards never produce a pair
    """
    result = ExploreResult()

    usable: List[Trajectory] = []

    for expert in experts:
        if replays_soundly(spec, expert):
            usable.append(expert)
        else:
            logger.warning(f"The expert trajectory for {expert.instruction.id} does not replay, skipping it")
            result.skipped.append(expert.instruction.id)

    requests = [
        (
            expert.instruction,
            RolloutConfig(temperature=temperature, seed=child_seed(seed, EXPLORE_STAGE, iteration, index, sample)),
            (),
        )
        for index, expert in enumerate(usable)
        for sample in range(rollouts_per_instruction)
    ]

    trajectories: List[Optional[Trajectory]] = collect_rollouts(params, spec, requests, cores)

    for position, trajectory in enumerate(trajectories):
        expert: Trajectory = usable[position // rollouts_per_instruction]

        if trajectory is None:
            result.skipped.append(expert.instruction.id)
            continue

        result.rollouts.append(trajectory)

        pair: Optional[TrajectoryPair] = pair_from_rollout(expert, trajectory)
        if pair is not None:
            result.pairs.append(pair)

    logger.info(
        f"Explored {len(result.rollouts)} rollouts on {spec.name}: {len(result.pairs)} pairs, "
        f"{len(result.skipped)} skipped"
    )

    return result


def explore_steps(
    params: PolicyParams,
    experts: Sequence[Trajectory],
    spec: EnvSpec,
    temperature: float = 0.0,
    seed: int = 0,
    iteration: int = 0,
    epoch: int = 0,
    cores: int = 1,
) -> List[ActionPair]:
    """Function that builds step level pairs by letting the policy continue from an expert prefix

    Parameters

    params : PolicyParams
        policy to explore with

    experts : Sequence[Trajectory]
        expert trajectories. One cut point per trajectory is drawn uniformly from its steps

    spec : EnvSpec
        environment of the instructions

    temperature : float
        sampling temperature of the continuation

    seed : int
        master seed

    iteration : int
        ETO iteration

    epoch : int
        epoch inside the iteration. Every epoch draws new cut points

    cores : int
        worker processes

    Returns

    List[ActionPair]
        returns (expert action, policy action) pairs at the cut step, ranked by the final reward of
        the continuation. Ties and identical actions are dropped
    """
    rng: np.random.Generator = np.random.default_rng(child_seed(seed, STEP_STAGE, iteration, epoch))
    cuts: List[int] = [int(rng.integers(len(expert))) for expert in experts]

    requests = [
        (
            expert.instruction,
            RolloutConfig(temperature=temperature, seed=child_seed(seed, STEP_STAGE, iteration, epoch, index)),
            expert.steps[:cut],
        )
        for index, (expert, cut) in enumerate(zip(experts, cuts))
    ]

    pairs: List[ActionPair] = []

    for expert, cut, continuation in zip(experts, cuts, collect_rollouts(params, spec, requests, cores)):
        if continuation is None or continuation.reward == expert.reward:
            continue

        expert_action: Tuple[int, ...] = expert.steps[cut].action_tokens
        policy_action: Tuple[int, ...] = continuation.steps[cut].action_tokens

        if expert_action == policy_action:
            continue

        prefix: Tuple[Step, ...] = expert.steps[:cut]

        if expert.reward > continuation.reward:
            pairs.append(
                ActionPair(expert.instruction, prefix, expert_action, policy_action, expert.reward, continuation.reward)
            )
        else:
            pairs.append(
                ActionPair(expert.instruction, prefix, policy_action, expert_action, continuation.reward, expert.reward)
            )

    logger.debug(f"Step level exploration produced {len(pairs)} pairs from {len(experts)} experts")

    return pairs

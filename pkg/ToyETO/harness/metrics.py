import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from algorithms import EVAL_STAGE, best_of_n, child_seed, collect_rollouts
from core import Instruction, Trajectory, Variation
from envs import EnvSpec, ReplayResult, RewardKind, generate_instruction, oracle_expert, replay
from logger import get_logger
from policy import PolicyParams, RolloutConfig

from .errors import ReplayMismatchError

logger = get_logger("harness")

TEST_SPLITS: Tuple[str, ...] = ("test_seen", "test_unseen")


@dataclass
class InstructionRecord:
    instruction_id: str
    reward: float
    success: bool
    n_steps: int


@dataclass
class SplitMetrics:
    split: str
    average_reward: float
    success_rate: float
    records: List[InstructionRecord] = field(default_factory=list)
    # progress after every action, only for environments with subgoal rewards
    curves: Dict[str, List[float]] = field(default_factory=dict)

    def summary(self) -> Dict[str, float]:
        return {"average_reward": self.average_reward, "success_rate": self.success_rate}

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "SplitMetrics":
        return cls(
            split=record["split"],
            average_reward=record["average_reward"],
            success_rate=record["success_rate"],
            records=[InstructionRecord(**row) for row in record["records"]],
            curves={key: list(value) for key, value in record["curves"].items()},
        )


def summarize(split: str, records: Sequence[InstructionRecord], curves: Dict[str, List[float]]) -> SplitMetrics:
    """average reward and success rate are plain means over the per-instruction records"""
    rewards: List[float] = [record.reward for record in records]
    successes: List[float] = [1.0 if record.success else 0.0 for record in records]

    return SplitMetrics(
        split=split,
        average_reward=float(np.mean(rewards)) if rewards else 0.0,
        success_rate=float(np.mean(successes)) if successes else 0.0,
        records=list(records),
        curves=curves,
    )


def score_trajectories(spec: EnvSpec, split: str, trajectories: Sequence[Trajectory]) -> SplitMetrics:
    """Function that replays evaluated trajectories and turns them into split metrics

    Parameters

    spec : EnvSpec
        environment of the trajectories

    split : str
        name of the split

    trajectories : Sequence[Trajectory]
        one trajectory per instruction

    Returns

    SplitMetrics
        returns the metrics. Success is the environment's own flag: reward 1.0 for toyshop,
        the terminal success state for toylab and the binary reward for toyhouse
    """
    records: List[InstructionRecord] = []
    curves: Dict[str, List[float]] = {}

    for trajectory in trajectories:
        result: ReplayResult = replay(spec, trajectory)

        if result.reward != trajectory.reward:
            raise ReplayMismatchError(
                f"The evaluated trajectory for {trajectory.instruction.id} replays to {result.reward}, "
                f"not {trajectory.reward}"
            )

        records.append(
            InstructionRecord(trajectory.instruction.id, trajectory.reward, result.success, len(trajectory))
        )

        if spec.reward_kind is RewardKind.DENSE_SUBGOAL:
            curves[trajectory.instruction.id] = list(result.progress)

    return summarize(split, records, curves)


def policy_trajectories(
    params: PolicyParams,
    spec: EnvSpec,
    instructions: Sequence[Instruction],
    seed: int = 0,
    n_samples: int = 1,
    cores: int = 1,
) -> List[Trajectory]:
    """greedy rollouts, or best-of-n sampled rollouts when n_samples > 1"""
    if n_samples == 1:
        requests = [(instruction, RolloutConfig(temperature=0.0), ()) for instruction in instructions]
        trajectories = collect_rollouts(params, spec, requests, cores)
    else:
        trajectories = [
            best_of_n(params, spec, instruction, n_samples, child_seed(seed, EVAL_STAGE, index), cores=cores)
            for index, instruction in enumerate(instructions)
        ]

    missing = [instruction.id for instruction, trajectory in zip(instructions, trajectories) if trajectory is None]
    if missing:
        raise ReplayMismatchError(f"The environment refused the evaluation episode of {missing[0]}")

    return list(trajectories)


def oracle_curves(spec: EnvSpec, instructions: Sequence[Instruction]) -> Dict[str, List[float]]:
    """progress curves of the oracle expert on each instruction, the reference line of the efficiency data"""
    if spec.reward_kind is not RewardKind.DENSE_SUBGOAL:
        return {}

    curves: Dict[str, List[float]] = {}

    for instruction in instructions:
        _, goal = generate_instruction(spec, instruction.variation_tag, instruction.seed)
        curves[instruction.id] = list(replay(spec, oracle_expert(spec, instruction, goal)).progress)

    return curves


def step_to_half(curve: Sequence[float]) -> Optional[int]:
    """first 1-based step whose progress reaches half of the final reward. None when nothing was earned"""
    if not curve or curve[-1] <= 0:
        return None

    half: float = curve[-1] / 2.0
    return next(step for step, value in enumerate(curve, start=1) if value >= half)


@dataclass
class MetricsReport:
    env: str
    method: str
    seed: int
    config: Dict[str, Any]
    splits: Dict[str, SplitMetrics] = field(default_factory=dict)
    # one row per evaluation point, iteration 0 is the policy after BC (or the untuned policy)
    iterations: List[Dict[str, Any]] = field(default_factory=list)
    training: Dict[str, Any] = field(default_factory=dict)
    oracle_curves: Dict[str, Dict[str, List[float]]] = field(default_factory=dict)
    aborted: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "MetricsReport":
        return cls(
            env=record["env"],
            method=record["method"],
            seed=record["seed"],
            config=record["config"],
            splits={name: SplitMetrics.from_dict(value) for name, value in record["splits"].items()},
            iterations=record["iterations"],
            training=record["training"],
            oracle_curves=record["oracle_curves"],
            aborted=record.get("aborted"),
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MetricsReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def is_consistent(self) -> bool:
        """true when every summary number equals the mean recomputed from its records"""
        for metrics in self.splits.values():
            recomputed: SplitMetrics = summarize(metrics.split, metrics.records, metrics.curves)
            if recomputed.summary() != metrics.summary():
                return False
        return True

import json
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from core import (
    Instruction,
    Trajectory,
    Variation,
    dump_instructions,
    dump_trajectories,
    load_instructions,
    load_trajectories,
)
from envs import EnvSpec, generate_instruction, make_spec, oracle_expert, replays_soundly
from logger import get_logger

from .config import ExperimentConfig
from .errors import ConfigError, DataExistsError, ReplayMismatchError, SplitOverlapError

logger = get_logger("harness")

SPLITS: Tuple[str, ...] = ("train", "test_seen", "test_unseen")
EXPERTS_FILE: str = "train.experts.jsonl"


def instructions_file(split: str) -> str:
    return f"{split}.instructions.jsonl"


@dataclass
class Dataset:
    spec: EnvSpec
    train: List[Instruction]
    test_seen: List[Instruction]
    test_unseen: List[Instruction]
    experts: List[Trajectory]

    def split(self, name: str) -> List[Instruction]:
        return getattr(self, name)


def draw_seeds(config: ExperimentConfig, spec: EnvSpec) -> Dict[str, List[int]]:
    """Function that draws distinct generator seeds for the three splits

    Parameters

    config : ExperimentConfig
        holds the split sizes and the data seed

    spec : EnvSpec
        environment whose seed ranges are sampled

    Returns

    Dict[str, List[int]]
        returns sorted seeds per split. train and test_seen come from one draw without replacement
    """
    rng: np.random.Generator = np.random.default_rng([config.data_seed, spec.world.salt])

    seen = spec.seen_seeds
    unseen = spec.unseen_seeds

    seen_draw: np.ndarray = rng.choice(len(seen), size=config.n_train + config.n_test_seen, replace=False) + seen.start
    unseen_draw: np.ndarray = rng.choice(len(unseen), size=config.n_test_unseen, replace=False) + unseen.start

    return {
        "train": sorted(int(seed) for seed in seen_draw[: config.n_train]),
        "test_seen": sorted(int(seed) for seed in seen_draw[config.n_train:]),
        "test_unseen": sorted(int(seed) for seed in unseen_draw),
    }


def gen_data(config: ExperimentConfig, force: bool = False) -> Path:
    """Function that writes the instruction sets and the oracle expert trajectories of an environment

    Parameters

    config : ExperimentConfig
        environment, split sizes, data seed and the data directory

    force : bool
        overwrite an existing data directory

    Returns

    Path
        returns the directory the files were written to
    """
    config = config.resolved()
    spec: EnvSpec = make_spec(config.env, config.max_steps)
    directory: Path = config.data_path()

    if directory.exists() and any(directory.iterdir()):
        if not force:
            raise DataExistsError(f"The directory {directory} already holds data. Pass --force to overwrite it")
        shutil.rmtree(directory)

    directory.mkdir(parents=True, exist_ok=True)

    seeds: Dict[str, List[int]] = draw_seeds(config, spec)
    experts: List[Trajectory] = []

    for split in SPLITS:
        variation: Variation = Variation.UNSEEN if split == "test_unseen" else Variation.SEEN
        instructions: List[Instruction] = []

        for seed in seeds[split]:
            instruction, goal = generate_instruction(spec, variation, seed)
            instructions.append(instruction)

            if split == "train":
                experts.append(oracle_expert(spec, instruction, goal))

        dump_instructions(directory / instructions_file(split), instructions, spec.vocab)
        logger.info(f"Wrote {len(instructions)} {split} instructions for {spec.name}")

    dump_trajectories(directory / EXPERTS_FILE, experts, spec.vocab)

    mean_length: float = float(np.mean([len(expert) for expert in experts]))
    logger.info(f"Wrote {len(experts)} expert trajectories, {mean_length:.1f} steps on average")

    (directory / "data_config.json").write_text(
        json.dumps(
            {
                "env": config.env,
                "data_seed": config.data_seed,
                "max_steps": spec.max_steps,
                "n_train": config.n_train,
                "n_test_seen": config.n_test_seen,
                "n_test_unseen": config.n_test_unseen,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )

    return directory


def check_disjoint(train: Sequence[Instruction], tests: Dict[str, Sequence[Instruction]]) -> None:
    train_ids = {instruction.id for instruction in train}

    for split, instructions in tests.items():
        overlap = sorted(train_ids & {instruction.id for instruction in instructions})
        if overlap:
            raise SplitOverlapError(f"The {split} split shares {len(overlap)} instructions with train, e.g. {overlap[0]}")


def check_replays(spec: EnvSpec, trajectories: Sequence[Trajectory]) -> None:
    for trajectory in trajectories:
        if not replays_soundly(spec, trajectory):
            raise ReplayMismatchError(
                f"The trajectory for {trajectory.instruction.id} does not replay to its stored reward {trajectory.reward}"
            )


def load_dataset(config: ExperimentConfig) -> Dataset:
    """loads a generated dataset, checking split disjointness and that every expert replays"""
    config = config.resolved()
    spec: EnvSpec = make_spec(config.env, config.max_steps)
    directory: Path = config.data_path()

    if not (directory / EXPERTS_FILE).is_file():
        raise ConfigError(f"No generated data at {directory}. Run gen-data first")

    splits: Dict[str, List[Instruction]] = {
        split: load_instructions(directory / instructions_file(split), spec.vocab) for split in SPLITS
    }

    check_disjoint(splits["train"], {"test_seen": splits["test_seen"], "test_unseen": splits["test_unseen"]})

    by_id: Dict[str, Instruction] = {instruction.id: instruction for instruction in splits["train"]}
    experts: List[Trajectory] = load_trajectories(directory / EXPERTS_FILE, spec.vocab, by_id)

    check_replays(spec, experts)

    return Dataset(spec, splits["train"], splits["test_seen"], splits["test_unseen"], experts)

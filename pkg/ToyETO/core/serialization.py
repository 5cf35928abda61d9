import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

from .errors import InvalidTrajectoryError
from .trajectory import Instruction, Source, Step, Trajectory, Variation
from .vocabulary import Vocabulary

PathLike = Union[str, Path]

TRAJECTORY_FIELDS = ("instruction_id", "env", "variation", "seed", "reward", "source", "steps")
INSTRUCTION_FIELDS = ("instruction_id", "env", "variation", "seed", "text")


def trajectory_to_record(trajectory: Trajectory, vocab: Vocabulary) -> Dict[str, Any]:
    """Function that converts a trajectory into the line record. The trailing <eoa> of each action is implied

    Parameters

    trajectory : Trajectory
        trajectory to convert

    vocab : Vocabulary
        vocabulary used to turn the token ids back into text

    Returns

    Dict[str, Any]
        returns a dictionary with exactly the persisted fields
    """
    steps: List[Dict[str, Optional[str]]] = []

    for step in trajectory.steps:
        steps.append(
            {
                "action": vocab.to_text(step.action_tokens[:-1]),
                "observation": None
                if step.observation_tokens is None
                else vocab.to_text(step.observation_tokens),
            }
        )

    return {
        "instruction_id": trajectory.instruction.id,
        "env": trajectory.instruction.env_name,
        "variation": trajectory.instruction.variation_tag.value,
        "seed": trajectory.seed,
        "reward": trajectory.reward,
        "source": trajectory.source.value,
        "steps": steps,
    }


def trajectory_from_record(
    record: Mapping[str, Any], vocab: Vocabulary, instructions: Mapping[str, Instruction]
) -> Trajectory:
    """rebuilds a trajectory from its record. Tokens are recomputed from the vocabulary"""
    if tuple(sorted(record)) != tuple(sorted(TRAJECTORY_FIELDS)):
        raise InvalidTrajectoryError(f"The record has the fields {sorted(record)}, expected {sorted(TRAJECTORY_FIELDS)}")

    instruction: Optional[Instruction] = instructions.get(record["instruction_id"])

    if instruction is None:
        raise InvalidTrajectoryError(f"The instruction {record['instruction_id']} of the record is unknown")

    if instruction.env_name != record["env"] or instruction.variation_tag.value != record["variation"]:
        raise InvalidTrajectoryError(f"The record for {instruction.id} disagrees with its instruction")

    steps: List[Step] = []

    for raw_step in record["steps"]:
        observation = raw_step["observation"]
        steps.append(
            Step(
                action_tokens=vocab.tokenize(raw_step["action"]) + (vocab.eoa_id,),
                observation_tokens=None if observation is None else vocab.tokenize(observation),
            )
        )

    return Trajectory(
        instruction=instruction,
        steps=tuple(steps),
        reward=float(record["reward"]),
        source=Source(record["source"]),
        seed=int(record["seed"]),
    )


def dump_trajectories(path: PathLike, trajectories: Iterable[Trajectory], vocab: Vocabulary) -> int:
    """writes one json record per line and returns how many were written"""
    count: int = 0

    with open(path, "w", encoding="utf-8") as output:
        for trajectory in trajectories:
            output.write(json.dumps(trajectory_to_record(trajectory, vocab)) + "\n")
            count += 1

    return count


def load_trajectories(
    path: PathLike, vocab: Vocabulary, instructions: Mapping[str, Instruction]
) -> List[Trajectory]:
    trajectories: List[Trajectory] = []

    with open(path, "r", encoding="utf-8") as input_file:
        for line in input_file:
            if line.strip():
                trajectories.append(trajectory_from_record(json.loads(line), vocab, instructions))

    return trajectories


def instruction_to_record(instruction: Instruction, vocab: Vocabulary) -> Dict[str, Any]:
    return {
        "instruction_id": instruction.id,
        "env": instruction.env_name,
        "variation": instruction.variation_tag.value,
        "seed": instruction.seed,
        "text": vocab.to_text(instruction.tokens),
    }


def dump_instructions(path: PathLike, instructions: Iterable[Instruction], vocab: Vocabulary) -> int:
    count: int = 0

    with open(path, "w", encoding="utf-8") as output:
        for instruction in instructions:
            output.write(json.dumps(instruction_to_record(instruction, vocab)) + "\n")
            count += 1

    return count


def load_instructions(path: PathLike, vocab: Vocabulary) -> List[Instruction]:
    instructions: List[Instruction] = []

    with open(path, "r", encoding="utf-8") as input_file:
        for line in input_file:
            if not line.strip():
                continue

            record: Dict[str, Any] = json.loads(line)
            instructions.append(
                Instruction(
                    id=record["instruction_id"],
                    tokens=vocab.tokenize(record["text"]),
                    env_name=record["env"],
                    variation_tag=Variation(record["variation"]),
                    seed=int(record["seed"]),
                )
            )

    return instructions

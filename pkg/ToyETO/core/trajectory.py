from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidTrajectoryError, PairingError
from .vocabulary import Vocabulary


class Variation(str, Enum):
    SEEN = "seen"
    UNSEEN = "unseen"


class Source(str, Enum):
    EXPERT = "expert"
    ROLLOUT = "rollout"


@dataclass(frozen=True)
class Instruction:
    """A task instruction u. The seed is the generator seed so the environment can rebuild the hidden goal"""

    id: str
    tokens: Tuple[int, ...]
    env_name: str
    variation_tag: Variation
    seed: int

    def __post_init__(self) -> None:
        if len(self.tokens) == 0:
            raise InvalidTrajectoryError(f"The instruction {self.id} has no tokens")


@dataclass(frozen=True)
class Step:
    """One agent action and the observation that followed it. The final step has no observation"""

    action_tokens: Tuple[int, ...]
    observation_tokens: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if len(self.action_tokens) == 0:
            raise InvalidTrajectoryError("A step has to have at least the end-of-action marker")


@dataclass(frozen=True)
class Trajectory:
    instruction: Instruction
    steps: Tuple[Step, ...]
    reward: float
    source: Source
    seed: int

    def __post_init__(self) -> None:
        if len(self.steps) == 0:
            raise InvalidTrajectoryError(f"The trajectory for {self.instruction.id} has no steps")

        if not 0.0 <= self.reward <= 1.0:
            raise InvalidTrajectoryError(
                f"The trajectory for {self.instruction.id} has reward {self.reward} outside of [0, 1]"
            )

        # every step except the last one is followed by an observation
        for position, step in enumerate(self.steps[:-1]):
            if step.observation_tokens is None:
                raise InvalidTrajectoryError(
                    f"Step {position} of {self.instruction.id} is not the final step but has no observation"
                )

        if self.steps[-1].observation_tokens is not None:
            raise InvalidTrajectoryError(f"The final step of {self.instruction.id} carries an observation")

    @property
    def actions(self) -> List[Tuple[int, ...]]:
        return [step.action_tokens for step in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class TrajectoryPair:
    """winner is preferred over loser for the same instruction. The reward ordering is checked where pairs are trained on"""

    instruction: Instruction
    winner: Trajectory
    loser: Trajectory

    def __post_init__(self) -> None:
        if not (self.winner.instruction.id == self.loser.instruction.id == self.instruction.id):
            raise PairingError(
                f"The pair for {self.instruction.id} mixes trajectories of "
                f"{self.winner.instruction.id} and {self.loser.instruction.id}"
            )


@dataclass(frozen=True)
class ActionPair:
    """Two candidate actions for step t after teacher forcing the expert's first t-1 steps"""

    instruction: Instruction
    prefix: Tuple[Step, ...]
    winner_action: Tuple[int, ...]
    loser_action: Tuple[int, ...]
    winner_reward: float
    loser_reward: float


@dataclass(frozen=True, eq=False)
class FlatSequence:
    """flat token ids plus a mask that is true on agent emitted positions"""

    token_ids: np.ndarray
    action_mask: np.ndarray

    def __post_init__(self) -> None:
        if self.token_ids.shape != self.action_mask.shape:
            raise InvalidTrajectoryError("The action mask has to be as long as the token sequence")
        self.token_ids.setflags(write=False)
        self.action_mask.setflags(write=False)

    def __len__(self) -> int:
        return int(self.token_ids.shape[0])

    @property
    def n_action_tokens(self) -> int:
        return int(self.action_mask.sum())


def _check_action(action_tokens: Sequence[int], vocab: Vocabulary, where: str) -> None:
    """an action is valid when every id is known and the only <eoa> is the last token"""
    if len(action_tokens) == 0:
        raise InvalidTrajectoryError(f"The action of {where} is empty")

    for token_id in action_tokens:
        if not vocab.is_valid(token_id):
            raise InvalidTrajectoryError(f"The action of {where} has the unknown token id {token_id}")

    if action_tokens[-1] != vocab.eoa_id:
        raise InvalidTrajectoryError(f"The action of {where} is not terminated by the end-of-action marker")

    if vocab.eoa_id in action_tokens[:-1]:
        raise InvalidTrajectoryError(f"The action of {where} has an end-of-action marker before its end")


def _check_tokens(token_ids: Sequence[int], vocab: Vocabulary, where: str) -> None:
    for token_id in token_ids:
        if not vocab.is_valid(token_id):
            raise InvalidTrajectoryError(f"The {where} has the unknown token id {token_id}")


def _layout(
    instruction: Instruction, steps: Sequence[Step], vocab: Vocabulary, mask_from_step: int
) -> FlatSequence:
    """builds the fixed flat layout. Action tokens of steps >= mask_from_step are marked"""
    _check_tokens(instruction.tokens, vocab, f"instruction {instruction.id}")

    token_ids: List[int] = [vocab.inst_id, *instruction.tokens]
    mask: List[bool] = [False] * len(token_ids)

    for position, step in enumerate(steps):
        where: str = f"step {position} of {instruction.id}"

        _check_action(step.action_tokens, vocab, where)

        token_ids.append(vocab.act_id)
        mask.append(False)

        token_ids.extend(step.action_tokens)
        mask.extend([position >= mask_from_step] * len(step.action_tokens))

        if step.observation_tokens is not None:
            _check_tokens(step.observation_tokens, vocab, f"observation of {where}")

            token_ids.append(vocab.obs_id)
            token_ids.extend(step.observation_tokens)
            mask.extend([False] * (len(step.observation_tokens) + 1))

    return FlatSequence(np.asarray(token_ids, dtype=np.int64), np.asarray(mask, dtype=bool))


def flatten(trajectory: Trajectory, vocab: Vocabulary) -> FlatSequence:
    """Function that lays a trajectory out as one token sequence

    Parameters

    trajectory : Trajectory
        trajectory to flatten. Every token id has to be valid in the vocab

    vocab : Vocabulary
        vocabulary that owns the trajectory's tokens

    Returns

    FlatSequence
        returns [<inst>, u, (<act>, a_j, <obs>, o_j)*, <act>, a_n] with the mask true on every
        action token including the end-of-action markers
    """
    return _layout(trajectory.instruction, trajectory.steps, vocab, mask_from_step=0)


def flatten_action(
    instruction: Instruction, prefix: Sequence[Step], action_tokens: Sequence[int], vocab: Vocabulary
) -> FlatSequence:
    """Function that lays out a teacher forced prefix followed by one candidate action

    Parameters

    instruction : Instruction
        instruction of the expert trajectory the prefix was taken from

    prefix : Sequence[Step]
        the first t-1 expert steps. Each has to carry its observation

    action_tokens : Sequence[int]
        candidate action for step t, terminated by the end-of-action marker

    Returns

    FlatSequence
        returns the flat sequence with the mask true only on the candidate action
    """
    for position, step in enumerate(prefix):
        if step.observation_tokens is None:
            raise InvalidTrajectoryError(
                f"Prefix step {position} of {instruction.id} has no observation to condition on"
            )

    steps: List[Step] = [*prefix, Step(tuple(action_tokens))]

    return _layout(instruction, steps, vocab, mask_from_step=len(prefix))


def segment_actions(flat: FlatSequence) -> List[Tuple[int, ...]]:
    """splits the masked runs of a flat sequence back into the action token sequences"""
    segments: List[Tuple[int, ...]] = []
    current: List[int] = []

    for token_id, is_action in zip(flat.token_ids.tolist(), flat.action_mask.tolist()):
        if is_action:
            current.append(token_id)
        elif current:
            segments.append(tuple(current))
            current = []

    if current:
        segments.append(tuple(current))

    return segments


def pair_from_rollout(expert: Trajectory, rollout: Trajectory) -> Optional[TrajectoryPair]:
    """Function that turns an expert trajectory and an explored trajectory into a contrastive pair

    Parameters

    expert : Trajectory
        expert trajectory for the instruction

    rollout : Trajectory
        trajectory the policy produced for the same instruction

    Returns

    Optional[TrajectoryPair]
        returns the pair with the higher reward trajectory as the winner, or None when the rewards tie
    """
    if expert.instruction.id != rollout.instruction.id:
        raise PairingError(
            f"Can not pair the expert trajectory for {expert.instruction.id} "
            f"with a rollout for {rollout.instruction.id}"
        )

    if expert.reward == rollout.reward:
        return None

    if expert.reward > rollout.reward:
        return TrajectoryPair(expert.instruction, winner=expert, loser=rollout)

    return TrajectoryPair(expert.instruction, winner=rollout, loser=expert)


def dedupe_pairs(pairs: Sequence[TrajectoryPair]) -> List[TrajectoryPair]:
    """drops pairs that repeat the same instruction, winner actions and loser actions. First one wins"""
    seen = set()
    unique: List[TrajectoryPair] = []

    for pair in pairs:
        key = (pair.instruction.id, tuple(pair.winner.actions), tuple(pair.loser.actions))
        if key not in seen:
            seen.add(key)
            unique.append(pair)

    return unique

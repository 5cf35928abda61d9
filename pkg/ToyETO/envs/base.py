from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Sequence, Tuple

import numpy as np

from core import EtoError, Variation, Vocabulary, RATIONALE_DELIMITER, EOA

NOTHING_HAPPENED: Tuple[str, ...] = ("nothing", "happened")


class GenerationError(EtoError):
    """Exception that will be raised if an instruction is requested for a seed outside of the split's range"""


class EnvironmentStepError(EtoError):
    """Exception that will be raised if an episode is driven in a way the environment does not allow"""


class OracleError(EtoError):
    """Exception that will be raised if the oracle expert can not reach the goal"""


class RewardKind(str, Enum):
    DENSE_MATCH = "dense_match"
    DENSE_SUBGOAL = "dense_subgoal"
    BINARY = "binary"


@dataclass(frozen=True)
class SeedRange:
    """half open range of generator seeds [start, stop)"""

    start: int
    stop: int

    def __contains__(self, seed: object) -> bool:
        return isinstance(seed, (int, np.integer)) and self.start <= int(seed) < self.stop

    def __len__(self) -> int:
        return self.stop - self.start


class World(ABC):
    """Rules of one toy environment. Worlds are stateless, every latent state is an immutable record"""

    name: str
    reward_kind: RewardKind
    default_max_steps: int
    # mixed into the generator seed so two worlds never share a goal stream
    salt: int

    @abstractmethod
    def words(self) -> List[str]:
        """every word the world can print or accept, in a fixed order"""

    @abstractmethod
    def make_goal(self, variation: Variation, rng: np.random.Generator) -> Any:
        """draws the hidden goal record. The record has to expose instruction_words"""

    @abstractmethod
    def start(self, goal: Any) -> Any:
        """latent state at the beginning of an episode"""

    @abstractmethod
    def initial_words(self, goal: Any, latent: Any) -> List[str]:
        """content of the first observation, a fixed function of the goal"""

    @abstractmethod
    def transition(self, goal: Any, latent: Any, words: Sequence[str]) -> Tuple[Any, List[str], bool]:
        """applies one action and returns (latent, observation words, terminal)"""

    @abstractmethod
    def final_reward(self, goal: Any, latent: Any) -> float:
        """reward in [0, 1] of a finished episode"""

    @abstractmethod
    def is_success(self, goal: Any, latent: Any) -> bool:
        """the success flag the success-rate metric counts"""

    @abstractmethod
    def plan(self, goal: Any) -> List[List[str]]:
        """action words of the oracle expert"""

    def progress(self, goal: Any, latent: Any, done: bool) -> float:
        """partial reward after any step. Worlds without subgoals only pay out at the end"""
        return self.final_reward(goal, latent) if done else 0.0

    def header(self, goal: Any) -> List[str]:
        """words every observation starts with, so the goal stays in the policy's context window"""
        return list(goal.instruction_words)


@dataclass(frozen=True)
class EnvSpec:
    name: str
    max_steps: int
    reward_kind: RewardKind
    vocab: Vocabulary
    seen_seeds: SeedRange
    unseen_seeds: SeedRange
    world: World = field(compare=False, repr=False)

    def seed_range(self, variation: Variation) -> SeedRange:
        return self.seen_seeds if Variation(variation) is Variation.SEEN else self.unseen_seeds


@dataclass(frozen=True)
class EnvState:
    """latent state s plus the step counter. The goal rides along because transitions need it"""

    goal: Any
    latent: Any
    step_count: int = 0
    done: bool = False


def action_words(action_tokens: Sequence[int], vocab: Vocabulary) -> List[str]:
    """Function that turns agent action tokens into the words the world interprets

    Parameters

    action_tokens : Sequence[int]
        tokens the agent emitted. A trailing end-of-action marker is dropped

    vocab : Vocabulary
        vocabulary of the environment

    Returns

    List[str]
        returns the words after the last rationale delimiter
    """
    words: List[str] = [vocab.detokenize(token_id) for token_id in action_tokens]

    if words and words[-1] == EOA:
        words = words[:-1]

    if RATIONALE_DELIMITER in words:
        # rationale is everything up to (and including) the last delimiter
        last: int = len(words) - 1 - words[::-1].index(RATIONALE_DELIMITER)
        words = words[last + 1:]

    return words

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict

import numpy as np

from policy import InvalidInputError


class Scale(str, Enum):
    # the literal fine-tuning values, meant for a pretrained model
    PRETRAINED = "pretrained"
    # the same ratios scaled so a from-scratch tiny policy moves in a few hundred steps
    DESK = "desk"


class EtoVariant(str, Enum):
    TRAJECTORY = "trajectory"
    STEP = "step"
    MIXTURE = "mixture"


class SelfPlayMode(str, Enum):
    ETO_ONLY = "eto_only"
    RFT_ONLY = "rft_only"
    RFT_THEN_ETO = "rft_then_eto"


DEFAULT_ITERATIONS: Dict[str, int] = {"toyshop": 2, "toylab": 2, "toyhouse": 1}
DEFAULT_THRESHOLD: Dict[str, float] = {"toyshop": 0.7, "toylab": 0.7, "toyhouse": 1.0}
STEP_BETA: float = 0.5

# stage tags mixed into derived seeds
SFT_STAGE: int = 1
DPO_STAGE: int = 2
EXPLORE_STAGE: int = 3
STEP_STAGE: int = 4
RFT_STAGE: int = 5
PG_STAGE: int = 6
SELF_PLAY_STAGE: int = 7
EVAL_STAGE: int = 8


def child_seed(*parts: int) -> int:
    """derives an independent 32 bit seed from a master seed and any number of indices"""
    return int(np.random.SeedSequence([int(part) for part in parts]).generate_state(1)[0])


@dataclass(frozen=True)
class TrainConfig:
    lr: float
    epochs: int
    batch_size: int
    weight_decay: float = 0.0
    warmup_frac: float = 0.03

    def __post_init__(self) -> None:
        if self.lr < 0 or self.epochs < 0 or self.batch_size < 1:
            raise InvalidInputError(
                f"Invalid training settings: lr={self.lr}, epochs={self.epochs}, batch_size={self.batch_size}"
            )

        if not 0 <= self.warmup_frac < 1:
            raise InvalidInputError(f"The warmup fraction has to be in [0, 1), not {self.warmup_frac}")


def phase_defaults(scale: Scale) -> Dict[str, TrainConfig]:
    """Function that returns the training settings of every phase for a learning rate scale

    Parameters

    scale : Scale
        pretrained or desk

    Returns

    Dict[str, TrainConfig]
        returns the settings keyed sft, dpo, step and pg
    """
    if Scale(scale) is Scale.PRETRAINED:
        return {
            "sft": TrainConfig(lr=1e-5, epochs=3, batch_size=64),
            "dpo": TrainConfig(lr=1e-6, epochs=3, batch_size=32),
            "step": TrainConfig(lr=1e-7, epochs=3, batch_size=32),
            "pg": TrainConfig(lr=1e-6, epochs=3, batch_size=32),
        }

    return {
        "sft": TrainConfig(lr=1e-2, epochs=30, batch_size=16),
        "dpo": TrainConfig(lr=1e-3, epochs=8, batch_size=16),
        "step": TrainConfig(lr=1e-4, epochs=8, batch_size=16),
        "pg": TrainConfig(lr=1e-3, epochs=8, batch_size=16),
    }


_DESK: Dict[str, TrainConfig] = phase_defaults(Scale.DESK)


@dataclass(frozen=True)
class EtoConfig:
    sft: TrainConfig = field(default_factory=lambda: _DESK["sft"])
    dpo: TrainConfig = field(default_factory=lambda: _DESK["dpo"])
    step: TrainConfig = field(default_factory=lambda: _DESK["step"])
    iterations: int = 2
    beta: float = 0.1
    step_beta: float = STEP_BETA
    rollouts_per_instruction: int = 1
    explore_temperature: float = 0.0
    variant: EtoVariant = EtoVariant.TRAJECTORY
    accumulate_pairs: bool = False
    dedupe_pairs: bool = False
    seed: int = 0
    cores: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", EtoVariant(self.variant))

        if self.iterations < 0:
            raise InvalidInputError(f"The number of iterations can not be negative, got {self.iterations}")

        if not (self.beta > 0 and self.step_beta > 0):
            raise InvalidInputError(f"beta has to be positive, got {self.beta} and {self.step_beta}")

        if self.rollouts_per_instruction < 1:
            raise InvalidInputError("At least one rollout per instruction is needed to explore")


@dataclass(frozen=True)
class RftConfig:
    sft: TrainConfig = field(default_factory=lambda: _DESK["sft"])
    k: int = 4
    temperature: float = 1.0
    threshold: float = 0.7
    seed: int = 0
    cores: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.threshold <= 1:
            raise InvalidInputError(f"The success threshold has to be in (0, 1], not {self.threshold}")

        if self.k < 1:
            raise InvalidInputError(f"RFT needs at least one sample per instruction, not {self.k}")


@dataclass(frozen=True)
class PgConfig:
    train: TrainConfig = field(default_factory=lambda: _DESK["pg"])
    beta: float = 0.1
    max_norm: float = 1.0
    temperature: float = 1.0
    seed: int = 0
    cores: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.beta < 0 or self.max_norm <= 0:
            raise InvalidInputError(f"Invalid policy gradient settings: beta={self.beta}, max_norm={self.max_norm}")


@dataclass(frozen=True)
class SelfPlayConfig:
    sft: TrainConfig = field(default_factory=lambda: _DESK["sft"])
    dpo: TrainConfig = field(default_factory=lambda: _DESK["dpo"])
    k: int = 4
    temperature: float = 1.0
    threshold: float = 0.7
    beta: float = 0.1
    seed: int = 0
    cores: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.k < 2:
            raise InvalidInputError(f"Self-play needs at least two samples per instruction to compare, not {self.k}")

        if not 0 < self.threshold <= 1 or not self.beta > 0:
            raise InvalidInputError(f"Invalid self-play settings: threshold={self.threshold}, beta={self.beta}")

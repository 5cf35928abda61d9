import json
import os
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

from algorithms import (
    DEFAULT_ITERATIONS,
    DEFAULT_THRESHOLD,
    STEP_BETA,
    EtoConfig,
    EtoVariant,
    PgConfig,
    RftConfig,
    Scale,
    SelfPlayConfig,
    SelfPlayMode,
    TrainConfig,
    phase_defaults,
)
from envs import WORLDS
from losses import DEFAULT_BETA
from policy import Architecture, InvalidInputError

from .errors import ConfigError

OUTPUT_ROOT_VARIABLE: str = "TOYETO_OUTPUT_ROOT"


class Method(str, Enum):
    UNTUNED = "untuned"
    SFT = "sft"
    ETO = "eto"
    STEPWISE = "stepwise"
    MIXTURE = "mixture"
    RFT = "rft"
    BEST_OF_N = "best_of_n"
    PG = "pg"
    SELF_PLAY_ETO = "self_play_eto"
    SELF_PLAY_RFT = "self_play_rft"
    SELF_PLAY_RFT_ETO = "self_play_rft_eto"


ETO_VARIANTS: Dict[Method, EtoVariant] = {
    Method.ETO: EtoVariant.TRAJECTORY,
    Method.STEPWISE: EtoVariant.STEP,
    Method.MIXTURE: EtoVariant.MIXTURE,
}

SELF_PLAY_MODES: Dict[Method, SelfPlayMode] = {
    Method.SELF_PLAY_ETO: SelfPlayMode.ETO_ONLY,
    Method.SELF_PLAY_RFT: SelfPlayMode.RFT_ONLY,
    Method.SELF_PLAY_RFT_ETO: SelfPlayMode.RFT_THEN_ETO,
}

PHASES = ("sft", "dpo", "step", "pg")


def output_root(explicit: Optional[str] = None) -> Path:
    """the --output flag, else $TOYETO_OUTPUT_ROOT, else ./toyeto_output"""
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(OUTPUT_ROOT_VARIABLE, "toyeto_output"))


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of an experiment. Fields left as None are resolved from the environment and the scale"""

    env: str = "toyshop"
    method: Method = Method.ETO
    seed: int = 0
    # instruction sets are shared by every master seed
    data_seed: int = 0
    n_train: int = 300
    n_test_seen: int = 60
    n_test_unseen: int = 60
    max_steps: Optional[int] = None
    scale: Scale = Scale.DESK
    embed_dim: int = 16
    window: int = 24
    hidden: int = 64
    sft_lr: Optional[float] = None
    sft_epochs: Optional[int] = None
    sft_batch_size: Optional[int] = None
    dpo_lr: Optional[float] = None
    dpo_epochs: Optional[int] = None
    dpo_batch_size: Optional[int] = None
    step_lr: Optional[float] = None
    step_epochs: Optional[int] = None
    step_batch_size: Optional[int] = None
    pg_lr: Optional[float] = None
    pg_epochs: Optional[int] = None
    pg_batch_size: Optional[int] = None
    weight_decay: float = 0.0
    warmup_frac: float = 0.03
    iterations: Optional[int] = None
    beta: Optional[float] = None
    step_beta: float = STEP_BETA
    rollouts_per_instruction: int = 1
    explore_temperature: float = 0.0
    accumulate_pairs: bool = False
    dedupe_pairs: bool = False
    sample_temperature: float = 1.0
    rft_k: int = 4
    rft_threshold: Optional[float] = None
    best_of_n: int = 10
    pg_beta: Optional[float] = None
    max_grad_norm: float = 1.0
    self_play_k: int = 4
    cores: int = 1
    verbose: bool = False
    data_dir: Optional[str] = None
    output_dir: Optional[str] = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "method", Method(self.method))
            object.__setattr__(self, "scale", Scale(self.scale))
        except ValueError as error:
            raise ConfigError(str(error)) from None

        if self.env not in WORLDS:
            raise ConfigError(f"The environment {self.env} is not supported. Choose from {', '.join(WORLDS)}")

        if min(self.n_train, self.n_test_seen, self.n_test_unseen) < 1:
            raise ConfigError("Every split needs at least one instruction")

        if self.cores < 1:
            raise ConfigError(f"The number of cores has to be positive, not {self.cores}")

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = asdict(self)
        record["method"] = self.method.value
        record["scale"] = self.scale.value
        return record

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "ExperimentConfig":
        known = {config_field.name for config_field in fields(cls)}
        unknown = sorted(set(record) - known)

        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(unknown)}")

        return cls(**record)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        try:
            record = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"The configuration file {path} was not found") from None
        except json.JSONDecodeError as error:
            raise ConfigError(f"The configuration file {path} is not valid JSON: {error}") from None

        if not isinstance(record, dict):
            raise ConfigError(f"The configuration file {path} has to hold a JSON object")

        return cls.from_dict(record)

    def override(self, **changes: Any) -> "ExperimentConfig":
        """copy with the given fields replaced. None values are ignored so unset cli flags keep the file's values"""
        return replace(self, **{key: value for key, value in changes.items() if value is not None})

    def resolved(self) -> "ExperimentConfig":
        """Function that fills every unset field from the per-environment defaults and the scale

        Returns

        ExperimentConfig
            returns a config without None hyperparameters. Resolving twice gives the same config
        """
        defaults: Dict[str, TrainConfig] = phase_defaults(self.scale)
        changes: Dict[str, Any] = {}

        for phase in PHASES:
            for attribute in ("lr", "epochs", "batch_size"):
                key: str = f"{phase}_{attribute}"
                if getattr(self, key) is None:
                    changes[key] = getattr(defaults[phase], attribute)

        if self.iterations is None:
            changes["iterations"] = DEFAULT_ITERATIONS[self.env]
        if self.beta is None:
            changes["beta"] = DEFAULT_BETA[self.env]
        if self.pg_beta is None:
            changes["pg_beta"] = changes.get("beta", self.beta)
        if self.rft_threshold is None:
            changes["rft_threshold"] = DEFAULT_THRESHOLD[self.env]

        return replace(self, **changes)

    # the accessors below expect a resolved config

    def train_config(self, phase: str) -> TrainConfig:
        try:
            return TrainConfig(
                lr=getattr(self, f"{phase}_lr"),
                epochs=getattr(self, f"{phase}_epochs"),
                batch_size=getattr(self, f"{phase}_batch_size"),
                weight_decay=self.weight_decay,
                warmup_frac=self.warmup_frac,
            )
        except (InvalidInputError, TypeError) as error:
            raise ConfigError(f"Invalid {phase} settings: {error}") from None

    def architecture(self, vocab_size: int) -> Architecture:
        return Architecture(vocab_size=vocab_size, embed_dim=self.embed_dim, window=self.window, hidden=self.hidden)

    def eto_config(self) -> EtoConfig:
        return EtoConfig(
            sft=self.train_config("sft"),
            dpo=self.train_config("dpo"),
            step=self.train_config("step"),
            iterations=self.iterations,
            beta=self.beta,
            step_beta=self.step_beta,
            rollouts_per_instruction=self.rollouts_per_instruction,
            explore_temperature=self.explore_temperature,
            variant=ETO_VARIANTS.get(self.method, EtoVariant.TRAJECTORY),
            accumulate_pairs=self.accumulate_pairs,
            dedupe_pairs=self.dedupe_pairs,
            seed=self.seed,
            cores=self.cores,
            verbose=self.verbose,
        )

    def rft_config(self) -> RftConfig:
        return RftConfig(
            sft=self.train_config("sft"),
            k=self.rft_k,
            temperature=self.sample_temperature,
            threshold=self.rft_threshold,
            seed=self.seed,
            cores=self.cores,
            verbose=self.verbose,
        )

    def pg_config(self) -> PgConfig:
        return PgConfig(
            train=self.train_config("pg"),
            beta=self.pg_beta,
            max_norm=self.max_grad_norm,
            temperature=self.sample_temperature,
            seed=self.seed,
            cores=self.cores,
            verbose=self.verbose,
        )

    def self_play_config(self) -> SelfPlayConfig:
        return SelfPlayConfig(
            sft=self.train_config("sft"),
            dpo=self.train_config("dpo"),
            k=self.self_play_k,
            temperature=self.sample_temperature,
            threshold=self.rft_threshold,
            beta=self.beta,
            seed=self.seed,
            cores=self.cores,
            verbose=self.verbose,
        )

    def data_path(self) -> Path:
        base: Path = Path(self.data_dir) if self.data_dir else output_root(self.output_dir) / "data"
        return base / self.env

    def run_path(self) -> Path:
        return output_root(self.output_dir) / self.env / self.method.value / f"seed{self.seed}"

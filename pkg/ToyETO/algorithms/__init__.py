from .errors import TrainingAbortedError
from .config import (
    Scale,
    EtoVariant,
    SelfPlayMode,
    TrainConfig,
    EtoConfig,
    RftConfig,
    PgConfig,
    SelfPlayConfig,
    DEFAULT_ITERATIONS,
    DEFAULT_THRESHOLD,
    STEP_BETA,
    EVAL_STAGE,
    SFT_STAGE,
    child_seed,
    phase_defaults,
)
from .trainer import TrainReport, minibatches, train, fit
from .cloning import supervised_finetune, behavioral_cloning
from .exploration import ExploreResult, collect_rollouts, explore_and_pair, explore_steps
from .eto import IterationReport, EtoReport, eto
from .baselines import (
    RftReport,
    PgReport,
    SelfPlayReport,
    augment_dataset,
    rft,
    best_of_n,
    pg_baseline,
    self_play_pairs,
    self_play,
)

from .base import (
    EnvSpec,
    EnvState,
    RewardKind,
    SeedRange,
    World,
    GenerationError,
    EnvironmentStepError,
    OracleError,
    NOTHING_HAPPENED,
    action_words,
)
from .environment import (
    WORLDS,
    SEEN_SEEDS,
    UNSEEN_SEEDS,
    make_spec,
    generate_instruction,
    goal_for,
    reset,
    step,
    final_reward,
    progress,
    is_success,
    oracle_expert,
    Episode,
    ReplayResult,
    replay,
    replays_soundly,
)
from .toyshop import ToyShop
from .toylab import ToyLab, N_SUBGOALS
from .toyhouse import ToyHouse

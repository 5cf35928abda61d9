from .errors import EtoError, VocabularyError, InvalidTrajectoryError, PairingError
from .vocabulary import (
    Vocabulary,
    PAD,
    INST,
    ACT,
    OBS,
    EOA,
    EOE,
    RATIONALE_DELIMITER,
    SPECIAL_TOKENS,
)
from .trajectory import (
    Variation,
    Source,
    Instruction,
    Step,
    Trajectory,
    TrajectoryPair,
    ActionPair,
    FlatSequence,
    flatten,
    flatten_action,
    segment_actions,
    pair_from_rollout,
    dedupe_pairs,
)
from .serialization import (
    trajectory_to_record,
    trajectory_from_record,
    dump_trajectories,
    load_trajectories,
    instruction_to_record,
    dump_instructions,
    load_instructions,
)

from .errors import ConfigError, DataExistsError, ReplayMismatchError, SplitOverlapError, MixedEnvironmentError
from .config import (
    OUTPUT_ROOT_VARIABLE,
    Method,
    ETO_VARIANTS,
    SELF_PLAY_MODES,
    ExperimentConfig,
    output_root,
)
from .data import (
    SPLITS,
    EXPERTS_FILE,
    Dataset,
    instructions_file,
    draw_seeds,
    gen_data,
    check_disjoint,
    check_replays,
    load_dataset,
)
from .metrics import (
    TEST_SPLITS,
    InstructionRecord,
    SplitMetrics,
    MetricsReport,
    summarize,
    score_trajectories,
    policy_trajectories,
    oracle_curves,
    step_to_half,
)
from .runner import Evaluator, run, run_seeds, evaluate_checkpoint, reportable
from .tables import (
    per_seed_frame,
    method_table,
    iteration_frame,
    curve_frames,
    efficiency_frame,
    emit_tables,
)
from .diagnostics import CHECK_ARCH, Fixture, make_fixture, run_grad_checks

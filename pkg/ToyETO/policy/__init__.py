from .errors import InvalidInputError, CheckpointError
from .params import Architecture, PolicyParams, unpack, zeros, init_params
from .model import (
    PAD_ID,
    ForwardCache,
    BatchCache,
    log_softmax,
    forward,
    backward,
    left_pad,
    token_logits,
    sequence_contexts,
    batch_logprobs,
    weighted_grad,
    trajectory_logprob,
    trajectory_logprob_grad,
    token_kl,
)
from .rollout import ACTION_BUDGET, RolloutConfig, sample_token, rollout
from .checkpoint import MAGIC, save_checkpoint, load_checkpoint

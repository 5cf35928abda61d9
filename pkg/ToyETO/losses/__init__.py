from .errors import PreferenceOrderError, NonFiniteGradientError
from .objectives import (
    DEFAULT_BETA,
    DpoConfig,
    sft_loss,
    preference_loss,
    dpo_loss,
    stepwise_dpo_loss,
    bt_preference_prob,
    kl_regularized_return,
)
from .optimizer import OptimizerState, lr_at, optimizer_step, clip_by_global_norm
from .gradcheck import LossFunction, grad_check

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from policy import PolicyParams

from .errors import NonFiniteGradientError


@dataclass
class OptimizerState:
    """AdamW moments plus the warmup and cosine schedule. Single owner, updated in place"""

    lr: float
    total_steps: int
    weight_decay: float = 0.0
    warmup_frac: float = 0.03
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    @classmethod
    def create(
        cls, n_params: int, lr: float, total_steps: int, weight_decay: float = 0.0, warmup_frac: float = 0.03
    ) -> "OptimizerState":
        return cls(
            lr=lr,
            total_steps=max(int(total_steps), 1),
            weight_decay=weight_decay,
            warmup_frac=warmup_frac,
            m=np.zeros(n_params),
            v=np.zeros(n_params),
        )

    @property
    def warmup_steps(self) -> int:
        return math.ceil(self.warmup_frac * self.total_steps)


def lr_at(state: OptimizerState, step: int) -> float:
    """Function that evaluates the learning rate schedule

    Parameters

    state : OptimizerState
        holds the peak learning rate, warmup fraction and horizon

    step : int
        zero based optimizer step

    Returns

    float
        returns the linearly warmed up rate (0 at step 0 when there is any warmup), then cosine decay to 0
    """
    warmup: int = state.warmup_steps

    if step < warmup:
        return state.lr * step / warmup

    decay_steps: int = max(state.total_steps - warmup, 1)
    progress: float = min(max((step - warmup) / decay_steps, 0.0), 1.0)

    return state.lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def optimizer_step(state: OptimizerState, params: PolicyParams, grad: np.ndarray) -> PolicyParams:
    """Function that applies one AdamW update

    Parameters

    state : OptimizerState
        moments and schedule. Updated in place

    params : PolicyParams
        current parameters

    grad : np.ndarray
        gradient of the loss that is minimized

    Returns

    PolicyParams
        returns the updated parameters
    """
    if grad.shape != params.theta.shape:
        raise NonFiniteGradientError(f"The gradient has shape {grad.shape} but the parameters have {params.theta.shape}")

    if not np.all(np.isfinite(grad)):
        bad: int = int(np.flatnonzero(~np.isfinite(grad))[0])
        raise NonFiniteGradientError(f"The gradient is not finite at coordinate {bad} (optimizer step {state.step})")

    lr: float = lr_at(state, state.step)
    t: int = state.step + 1

    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad ** 2

    m_hat: np.ndarray = state.m / (1.0 - state.beta1 ** t)
    v_hat: np.ndarray = state.v / (1.0 - state.beta2 ** t)

    theta: np.ndarray = params.theta - lr * (m_hat / (np.sqrt(v_hat) + state.eps) + state.weight_decay * params.theta)
    state.step = t

    if not np.all(np.isfinite(theta)):
        raise NonFiniteGradientError(f"The update at optimizer step {t} produced non-finite parameters")

    return params.with_theta(theta)


def clip_by_global_norm(grad: np.ndarray, max_norm: float) -> Tuple[np.ndarray, float]:
    """rescales the gradient so its L2 norm is at most max_norm. Returns the clipped gradient and the original norm"""
    norm: float = float(np.linalg.norm(grad))

    if norm > max_norm:
        return grad * (max_norm / norm), norm

    return grad, norm

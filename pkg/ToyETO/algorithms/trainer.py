import math
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from logger import get_logger
from losses import NonFiniteGradientError, OptimizerState, optimizer_step
from policy import PolicyParams

from .config import TrainConfig
from .errors import TrainingAbortedError

logger = get_logger("algorithms")

BatchLoss = Callable[[PolicyParams, Any], Tuple[float, np.ndarray]]
EpochBatches = Callable[[int, np.random.Generator, PolicyParams], List[Any]]


@dataclass
class TrainReport:
    label: str
    n_seen: int = 0
    n_steps: int = 0
    epoch_losses: List[float] = field(default_factory=list)
    # loss of the very first batch, before any update
    first_loss: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n_seen": self.n_seen,
            "n_steps": self.n_steps,
            "epoch_losses": list(self.epoch_losses),
            "first_loss": self.first_loss,
        }


def minibatches(items: Sequence[Any], batch_size: int, rng: np.random.Generator) -> List[List[Any]]:
    order: np.ndarray = rng.permutation(len(items))
    return [[items[index] for index in order[start:start + batch_size]] for start in range(0, len(items), batch_size)]


def train(
    params: PolicyParams,
    epoch_batches: EpochBatches,
    batch_loss: BatchLoss,
    cfg: TrainConfig,
    max_batches_per_epoch: int,
    seed: int,
    label: str,
    verbose: bool = False,
) -> Tuple[PolicyParams, TrainReport]:
    """Function that runs the minibatch loop every training phase shares

    Parameters

    params : PolicyParams
        starting parameters

    epoch_batches : EpochBatches
        called once per epoch with (epoch, rng, current params). Returns the batches of that
        epoch in the order they are applied

    batch_loss : BatchLoss
        maps (params, batch) to (loss, gradient)

    cfg : TrainConfig
        learning rate, epochs, weight decay and warmup

    max_batches_per_epoch : int
        upper bound on the batches per epoch. Sets the horizon of the cosine schedule

    seed : int
        seed of the shuffling rng

    label : str
        name of the phase used in logs and the report

    verbose : bool
        show a progress bar over the epochs

    Returns

    Tuple[PolicyParams, TrainReport]
        returns the trained parameters and the per-epoch mean losses
    """
    report = TrainReport(label=label)

    if cfg.epochs == 0 or max_batches_per_epoch == 0:
        return params, report

    state = OptimizerState.create(
        params.arch.n_params,
        lr=cfg.lr,
        total_steps=cfg.epochs * max_batches_per_epoch,
        weight_decay=cfg.weight_decay,
        warmup_frac=cfg.warmup_frac,
    )
    rng: np.random.Generator = np.random.default_rng(seed)

    for epoch in tqdm(range(cfg.epochs), desc=label, disable=not verbose):
        batches: List[Any] = epoch_batches(epoch, rng, params)

        if not batches:
            logger.debug(f"{label}: epoch {epoch} has no batches")
            continue

        losses: List[float] = []

        for batch in batches:
            loss, grad = batch_loss(params, batch)

            if not math.isfinite(loss):
                raise TrainingAbortedError(f"{label}: the loss became {loss} at optimizer step {state.step}", params)

            try:
                params = optimizer_step(state, params, grad)
            except NonFiniteGradientError as error:
                raise TrainingAbortedError(f"{label}: {error.message}", params) from error

            if report.first_loss is None:
                report.first_loss = loss

            losses.append(loss)
            logger.debug(f"{label}: epoch {epoch} batch loss {loss:.6f}")

        report.n_seen += sum(len(batch) for batch in batches)
        report.epoch_losses.append(float(np.mean(losses)))
        logger.info(f"{label}: epoch {epoch + 1}/{cfg.epochs} mean loss {report.epoch_losses[-1]:.6f}")

    report.n_steps = state.step

    return params, report


def fit(
    params: PolicyParams,
    items: Sequence[Any],
    batch_loss: BatchLoss,
    cfg: TrainConfig,
    seed: int,
    label: str,
    verbose: bool = False,
) -> Tuple[PolicyParams, TrainReport]:
    """trains on a fixed item set, reshuffled every epoch"""
    items = list(items)

    return train(
        params,
        lambda epoch, rng, current: minibatches(items, cfg.batch_size, rng),
        batch_loss,
        cfg,
        max_batches_per_epoch=math.ceil(len(items) / cfg.batch_size),
        seed=seed,
        label=label,
        verbose=verbose,
    )

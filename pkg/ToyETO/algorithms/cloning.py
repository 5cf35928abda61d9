from typing import List, Sequence, Tuple

from core import FlatSequence, InvalidTrajectoryError, Trajectory, Vocabulary, flatten
from logger import get_logger
from losses import sft_loss
from policy import PolicyParams

from .config import TrainConfig
from .trainer import TrainReport, fit

logger = get_logger("algorithms")


def supervised_finetune(
    params: PolicyParams,
    trajectories: Sequence[Trajectory],
    vocab: Vocabulary,
    cfg: TrainConfig,
    seed: int,
    label: str = "sft",
    verbose: bool = False,
) -> Tuple[PolicyParams, TrainReport]:
    """minimizes the masked SFT loss over any trajectory set, whatever the rewards"""
    flats: List[FlatSequence] = [flatten(trajectory, vocab) for trajectory in trajectories]

    return fit(params, flats, sft_loss, cfg, seed=seed, label=label, verbose=verbose)


def behavioral_cloning(
    params: PolicyParams,
    experts: Sequence[Trajectory],
    vocab: Vocabulary,
    cfg: TrainConfig,
    seed: int,
    verbose: bool = False,
) -> Tuple[PolicyParams, TrainReport]:
    """Function that imitates the expert trajectories to get the base agent

    Parameters

    params : PolicyParams
        initial parameters

    experts : Sequence[Trajectory]
        expert dataset. Every trajectory has to have reward 1.0

    vocab : Vocabulary
        vocabulary of the environment

    cfg : TrainConfig
        SFT settings. Zero epochs returns params unchanged

    seed : int
        seed of the batch shuffling

    verbose : bool
        show a progress bar

    Returns

    Tuple[PolicyParams, TrainReport]
        returns the base policy and the loss history
    """
    if not experts:
        raise InvalidTrajectoryError("Behavioral cloning needs at least one expert trajectory")

    for trajectory in experts:
        if trajectory.reward != 1.0:
            raise InvalidTrajectoryError(
                f"The expert trajectory for {trajectory.instruction.id} has reward {trajectory.reward}, not 1.0"
            )

    logger.info(f"Behavioral cloning on {len(experts)} expert trajectories for {cfg.epochs} epochs")

    return supervised_finetune(params, experts, vocab, cfg, seed, label="bc", verbose=verbose)

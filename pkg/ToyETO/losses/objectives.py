from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from core import ActionPair, FlatSequence, Trajectory, TrajectoryPair, Vocabulary, flatten, flatten_action
from policy import InvalidInputError, PolicyParams, batch_logprobs, trajectory_logprob, weighted_grad

from .errors import PreferenceOrderError

# beta per environment when the experiment does not set it
DEFAULT_BETA = {"toyshop": 0.1, "toylab": 0.1, "toyhouse": 0.5}


@dataclass(frozen=True)
class DpoConfig:
    """KL weight beta and the frozen reference policy the log-ratios are taken against"""

    beta: float
    reference: PolicyParams

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise InvalidInputError(f"beta has to be positive, not {self.beta}")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


def sft_loss(params: PolicyParams, flats: Sequence[FlatSequence]) -> Tuple[float, np.ndarray]:
    """Function that computes the masked auto-regressive loss of a batch

    Parameters

    params : PolicyParams
        policy parameters

    flats : Sequence[FlatSequence]
        flattened expert trajectories

    Returns

    Tuple[float, np.ndarray]
        returns the mean over the batch of -log pi(e|u) and its exact gradient
    """
    if len(flats) == 0:
        raise InvalidInputError("The SFT loss needs at least one sequence")

    values, batch = batch_logprobs(params, flats)
    batch_size: int = len(flats)

    loss: float = float(-values.sum() / batch_size)
    grad: np.ndarray = weighted_grad(params, batch, np.full(batch_size, -1.0 / batch_size))

    return loss, grad


def preference_loss(
    params: PolicyParams, cfg: DpoConfig, winners: Sequence[FlatSequence], losers: Sequence[FlatSequence]
) -> Tuple[float, np.ndarray]:
    """Function that computes the contrastive loss on already flattened winner/loser sequences

    Parameters

    params : PolicyParams
        policy parameters

    cfg : DpoConfig
        beta and the reference policy

    winners : Sequence[FlatSequence]
        preferred sequences

    losers : Sequence[FlatSequence]
        dispreferred sequences, aligned with winners

    Returns

    Tuple[float, np.ndarray]
        returns mean_i -log sigmoid(beta * ((lw - ll) - (rw - rl))) and its gradient with respect to params only
    """
    if len(winners) == 0 or len(winners) != len(losers):
        raise InvalidInputError(f"Expected equally many winners and losers, got {len(winners)} and {len(losers)}")

    n_pairs: int = len(winners)
    flats = [*winners, *losers]

    values, batch = batch_logprobs(params, flats)
    ref_values, _ = batch_logprobs(cfg.reference, flats)

    policy_margin: np.ndarray = values[:n_pairs] - values[n_pairs:]
    ref_margin: np.ndarray = ref_values[:n_pairs] - ref_values[n_pairs:]
    z: np.ndarray = cfg.beta * (policy_margin - ref_margin)

    # -log sigmoid(z) = softplus(-z)
    loss: float = float(np.logaddexp(0.0, -z).sum() / n_pairs)

    coefficient: np.ndarray = cfg.beta * _sigmoid(-z) / n_pairs
    grad: np.ndarray = weighted_grad(params, batch, np.concatenate([-coefficient, coefficient]))

    return loss, grad


def dpo_loss(
    params: PolicyParams, cfg: DpoConfig, pairs: Sequence[TrajectoryPair], vocab: Vocabulary
) -> Tuple[float, np.ndarray]:
    """trajectory level DPO. Every pair must rank its winner strictly above its loser"""
    for pair in pairs:
        if not pair.winner.reward > pair.loser.reward:
            raise PreferenceOrderError(
                f"The pair for {pair.instruction.id} has winner reward {pair.winner.reward} "
                f"and loser reward {pair.loser.reward}"
            )

    return preference_loss(
        params,
        cfg,
        [flatten(pair.winner, vocab) for pair in pairs],
        [flatten(pair.loser, vocab) for pair in pairs],
    )


def stepwise_dpo_loss(
    params: PolicyParams, cfg: DpoConfig, pairs: Sequence[ActionPair], vocab: Vocabulary
) -> Tuple[float, np.ndarray]:
    """Function that computes DPO on single actions conditioned on a teacher forced expert prefix

    Parameters

    params : PolicyParams
        policy parameters

    cfg : DpoConfig
        beta and the reference policy

    pairs : Sequence[ActionPair]
        action pairs. The actions must differ and the winner reward must be strictly higher

    vocab : Vocabulary
        vocabulary of the environment

    Returns

    Tuple[float, np.ndarray]
        returns the loss and its gradient
    """
    for pair in pairs:
        if tuple(pair.winner_action) == tuple(pair.loser_action):
            raise PreferenceOrderError(f"The action pair for {pair.instruction.id} compares an action with itself")

        if not pair.winner_reward > pair.loser_reward:
            raise PreferenceOrderError(
                f"The action pair for {pair.instruction.id} has winner reward {pair.winner_reward} "
                f"and loser reward {pair.loser_reward}"
            )

    return preference_loss(
        params,
        cfg,
        [flatten_action(pair.instruction, pair.prefix, pair.winner_action, vocab) for pair in pairs],
        [flatten_action(pair.instruction, pair.prefix, pair.loser_action, vocab) for pair in pairs],
    )


def bt_preference_prob(reward_w: float, reward_l: float) -> float:
    """Bradley-Terry probability that the first trajectory is preferred, sigmoid(r_w - r_l)"""
    return float(_sigmoid(np.float64(reward_w) - np.float64(reward_l)))


def kl_regularized_return(
    params: PolicyParams, ref: PolicyParams, trajectory: Trajectory, beta: float, vocab: Vocabulary
) -> float:
    """sampled estimate of r(u, e) - beta * sum_k (log pi_theta(t_k) - log pi_ref(t_k)) over the action tokens"""
    flat: FlatSequence = flatten(trajectory, vocab)

    log_ratio: float = trajectory_logprob(params, flat) - trajectory_logprob(ref, flat)

    return float(trajectory.reward - beta * log_ratio)

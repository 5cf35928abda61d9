from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from core import Instruction, Source, Step, Trajectory
from envs import EnvSpec, Episode, EnvironmentStepError
from logger import get_logger

from .errors import InvalidInputError
from .model import token_logits
from .params import PolicyParams

logger = get_logger("policy")

ACTION_BUDGET: int = 16


@dataclass(frozen=True)
class RolloutConfig:
    temperature: float = 0.0
    # None keeps the environment's own limit
    max_steps: Optional[int] = None
    seed: int = 0
    action_budget: int = ACTION_BUDGET

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise InvalidInputError(f"The temperature has to be non-negative, not {self.temperature}")


def sample_token(logits: np.ndarray, temperature: float, rng: np.random.Generator) -> int:
    """greedy argmax at temperature 0 (ties go to the lowest id), otherwise an inverse-CDF draw"""
    if temperature == 0:
        return int(np.argmax(logits))

    scaled: np.ndarray = logits / temperature
    probs: np.ndarray = np.exp(scaled - scaled.max())
    cumulative: np.ndarray = np.cumsum(probs)

    index: int = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, len(logits) - 1)


def _sample_action(
    params: PolicyParams, context: List[int], eoa_id: int, cfg: RolloutConfig, rng: np.random.Generator
) -> List[int]:
    action: List[int] = []

    while len(action) < cfg.action_budget:
        token: int = sample_token(token_logits(params, context + action), cfg.temperature, rng)
        action.append(token)
        if token == eoa_id:
            return action

    logger.debug(f"Action hit the budget of {cfg.action_budget} tokens and was ended with <eoa>")
    # the marker replaces the last sampled token so the action stays within budget
    action[-1] = eoa_id
    return action


def rollout(
    params: PolicyParams,
    spec: EnvSpec,
    instruction: Instruction,
    cfg: RolloutConfig,
    prefix: Sequence[Step] = (),
) -> Trajectory:
    """Function that lets the policy interact with an environment until the episode ends

    Parameters

    params : PolicyParams
        policy parameters. They are only read

    spec : EnvSpec
        environment the instruction was generated for

    instruction : Instruction
        task to solve

    cfg : RolloutConfig
        temperature, step limit, seed and the per-action token budget

    prefix : Sequence[Step]
        expert steps that are teacher forced before sampling starts. Every one of them
        has to leave the episode running

    Returns

    Trajectory
        returns the rollout trajectory with the environment's final reward. The prefix steps are part of it
    """
    if cfg.max_steps is not None and cfg.max_steps < spec.max_steps:
        spec = replace(spec, max_steps=cfg.max_steps)

    vocab = spec.vocab
    rng: np.random.Generator = np.random.default_rng(cfg.seed)

    episode = Episode(spec, instruction)
    # the first observation is a function of the instruction, the layout has no slot for it
    episode.reset()

    context: List[int] = [vocab.inst_id, *instruction.tokens]
    steps: List[Step] = []

    for forced in prefix:
        observation, done = episode.step(forced.action_tokens)
        if done:
            raise EnvironmentStepError(f"The forced prefix of {instruction.id} ends the episode")

        steps.append(Step(tuple(forced.action_tokens), observation))
        context.extend([vocab.act_id, *forced.action_tokens, vocab.obs_id, *observation])

    while True:
        context.append(vocab.act_id)
        action: List[int] = _sample_action(params, context, vocab.eoa_id, cfg, rng)
        context.extend(action)

        observation, done = episode.step(action)

        if done:
            steps.append(Step(tuple(action)))
            break

        steps.append(Step(tuple(action), observation))
        context.extend([vocab.obs_id, *observation])

    return Trajectory(
        instruction=instruction,
        steps=tuple(steps),
        reward=episode.reward(),
        source=Source.ROLLOUT,
        seed=cfg.seed,
    )

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from algorithms import child_seed
from core import ActionPair, Trajectory, TrajectoryPair, Variation, flatten, pair_from_rollout
from envs import EnvSpec, generate_instruction, make_spec, oracle_expert
from logger import get_logger
from losses import DpoConfig, dpo_loss, grad_check, sft_loss, stepwise_dpo_loss
from policy import Architecture, PolicyParams, RolloutConfig, init_params, rollout

logger = get_logger("harness")

# small enough that a few hundred finite differences stay cheap
CHECK_ARCH = {"embed_dim": 4, "window": 8, "hidden": 8}


@dataclass
class Fixture:
    params: PolicyParams
    reference: PolicyParams
    experts: List[Trajectory]
    pairs: List[TrajectoryPair]
    action_pairs: List[ActionPair]


def make_fixture(spec: EnvSpec, seed: int, n_instructions: int = 2) -> Fixture:
    """Function that draws random parameters plus expert, pair and action pair data for a gradient check

    Parameters

    spec : EnvSpec
        environment the data comes from

    seed : int
        fixture seed

    n_instructions : int
        number of seen instructions to build data from

    Returns

    Fixture
        returns the fixture. Losers are short sampled rollouts of the reference policy, so a pair
        is only missing when such a rollout happens to tie with the expert
    """
    arch = Architecture(vocab_size=len(spec.vocab), **CHECK_ARCH)
    params: PolicyParams = init_params(arch, child_seed(seed, 0))
    reference: PolicyParams = init_params(arch, child_seed(seed, 1))

    rng: np.random.Generator = np.random.default_rng(child_seed(seed, 2))
    experts: List[Trajectory] = []
    pairs: List[TrajectoryPair] = []
    action_pairs: List[ActionPair] = []

    for index in range(n_instructions):
        instruction, goal = generate_instruction(spec, Variation.SEEN, int(rng.integers(len(spec.seen_seeds))))
        expert: Trajectory = oracle_expert(spec, instruction, goal)
        experts.append(expert)

        explored: Trajectory = rollout(
            reference,
            spec,
            instruction,
            RolloutConfig(temperature=1.0, max_steps=2, seed=child_seed(seed, 3, index), action_budget=4),
        )
        pair = pair_from_rollout(expert, explored)
        if pair is not None:
            pairs.append(pair)

        cut: int = int(rng.integers(len(expert)))
        loser_action: Tuple[int, ...] = tuple(int(token) for token in rng.integers(1, len(spec.vocab), size=2))
        loser_action = tuple(token for token in loser_action if token != spec.vocab.eoa_id) + (spec.vocab.eoa_id,)

        if loser_action != expert.steps[cut].action_tokens:
            action_pairs.append(
                ActionPair(instruction, expert.steps[:cut], expert.steps[cut].action_tokens, loser_action, 1.0, 0.0)
            )

    return Fixture(params, reference, experts, pairs, action_pairs)


def run_grad_checks(env: str = "toyshop", n_fixtures: int = 3, seed: int = 0, beta: float = 0.5) -> Dict[str, float]:
    """Function that runs the finite difference check of the three training losses

    Parameters

    env : str
        environment to draw fixtures from

    n_fixtures : int
        number of random fixtures per loss

    seed : int
        master seed

    beta : float
        beta of the two preference losses

    Returns

    Dict[str, float]
        returns the worst relative error per loss over all fixtures
    """
    spec: EnvSpec = make_spec(env)
    vocab = spec.vocab
    worst: Dict[str, float] = {"sft": 0.0, "dpo": 0.0, "stepwise_dpo": 0.0}

    for index in range(n_fixtures):
        fixture: Fixture = make_fixture(spec, child_seed(seed, index))
        cfg = DpoConfig(beta, fixture.reference)
        flats = [flatten(expert, vocab) for expert in fixture.experts]

        checks = {"sft": lambda params: sft_loss(params, flats)}

        if fixture.pairs:
            checks["dpo"] = lambda params: dpo_loss(params, cfg, fixture.pairs, vocab)
        if fixture.action_pairs:
            checks["stepwise_dpo"] = lambda params: stepwise_dpo_loss(params, cfg, fixture.action_pairs, vocab)

        for name, loss_fn in checks.items():
            error: float = grad_check(loss_fn, fixture.params, seed=child_seed(seed, index, 4))
            worst[name] = max(worst[name], error)
            logger.debug(f"fixture {index} {name}: max relative error {error:.3e}")

    logger.info(", ".join(f"{name} {error:.3e}" for name, error in worst.items()))

    return worst

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from core import Instruction, Source, Step, Trajectory, Variation, Vocabulary

from .base import (
    EnvSpec,
    EnvState,
    EnvironmentStepError,
    GenerationError,
    OracleError,
    SeedRange,
    World,
    action_words,
)
from .toyhouse import ToyHouse
from .toylab import ToyLab
from .toyshop import ToyShop

WORLDS: Dict[str, Type[World]] = {"toyshop": ToyShop, "toylab": ToyLab, "toyhouse": ToyHouse}

SEEN_SEEDS: SeedRange = SeedRange(0, 100_000)
UNSEEN_SEEDS: SeedRange = SeedRange(100_000, 200_000)


@lru_cache(maxsize=None)
def make_spec(name: str, max_steps: Optional[int] = None) -> EnvSpec:
    """Function that builds the spec of one of the toy environments

    Parameters

    name : str
        one of toyshop, toylab or toyhouse

    max_steps : Optional[int]
        step limit. None uses the environment's default (15, 30 and 25)

    Returns

    EnvSpec
        returns the spec with its vocabulary and seed split
    """
    if name not in WORLDS:
        raise GenerationError(f"The environment {name} is not supported. Choose from {', '.join(WORLDS)}")

    world: World = WORLDS[name]()

    return EnvSpec(
        name=name,
        max_steps=world.default_max_steps if max_steps is None else int(max_steps),
        reward_kind=world.reward_kind,
        vocab=Vocabulary.build(world.words()),
        seen_seeds=SEEN_SEEDS,
        unseen_seeds=UNSEEN_SEEDS,
        world=world,
    )


def _words_to_tokens(vocab: Vocabulary, words: Sequence[str]) -> Tuple[int, ...]:
    return tuple(vocab.lookup(word) for word in words)


def generate_instruction(spec: EnvSpec, split: Variation, seed: int) -> Tuple[Instruction, Any]:
    """Function that deterministically draws an instruction and its hidden goal

    Parameters

    spec : EnvSpec
        environment to draw from

    split : Variation
        seen or unseen. Unseen goals use object types that never occur in the seen split

    seed : int
        generator seed. Has to be inside the split's seed range

    Returns

    Tuple[Instruction, Any]
        returns the instruction and the goal record
    """
    split = Variation(split)

    if seed not in spec.seed_range(split):
        seed_range: SeedRange = spec.seed_range(split)
        raise GenerationError(
            f"The seed {seed} is outside of the {split.value} range [{seed_range.start}, {seed_range.stop})"
        )

    rng: np.random.Generator = np.random.default_rng([spec.world.salt, int(seed)])

    goal: Any = spec.world.make_goal(split, rng)

    instruction = Instruction(
        id=f"{spec.name}-{split.value}-{int(seed)}",
        tokens=_words_to_tokens(spec.vocab, goal.instruction_words),
        env_name=spec.name,
        variation_tag=split,
        seed=int(seed),
    )

    return instruction, goal


def goal_for(spec: EnvSpec, instruction: Instruction) -> Any:
    """rebuilds the hidden goal of an instruction and checks it was generated for this spec"""
    if instruction.env_name != spec.name:
        raise EnvironmentStepError(f"The instruction {instruction.id} belongs to {instruction.env_name}, not {spec.name}")

    try:
        regenerated, goal = generate_instruction(spec, instruction.variation_tag, instruction.seed)
    except GenerationError as error:
        raise EnvironmentStepError(f"The instruction {instruction.id} is foreign: {error.message}") from None

    if regenerated.tokens != instruction.tokens or regenerated.id != instruction.id:
        raise EnvironmentStepError(f"The instruction {instruction.id} was not generated by {spec.name}")

    return goal


def _observation(spec: EnvSpec, goal: Any, content: Sequence[str]) -> Tuple[int, ...]:
    return _words_to_tokens(spec.vocab, [*spec.world.header(goal), *content])


def reset(spec: EnvSpec, instruction: Instruction) -> Tuple[EnvState, Tuple[int, ...]]:
    goal: Any = goal_for(spec, instruction)
    latent: Any = spec.world.start(goal)

    state = EnvState(goal=goal, latent=latent, step_count=0, done=False)

    return state, _observation(spec, goal, spec.world.initial_words(goal, latent))


def step(spec: EnvSpec, state: EnvState, action_tokens: Sequence[int]) -> Tuple[EnvState, Tuple[int, ...], bool]:
    """Function that applies one agent action

    Parameters

    spec : EnvSpec
        environment the state belongs to

    state : EnvState
        current state. Must not be done

    action_tokens : Sequence[int]
        tokens the agent emitted. A trailing end-of-action marker and leading rationale are ignored

    Returns

    Tuple[EnvState, Tuple[int, ...], bool]
        returns the next state, the observation tokens and whether the episode is over. Unknown
        actions print "nothing happened" and only advance the step counter
    """
    if state.done:
        raise EnvironmentStepError("Can not step an episode that is already done")

    if state.step_count >= spec.max_steps:
        raise EnvironmentStepError(f"The episode already used all {spec.max_steps} steps")

    words: List[str] = action_words(action_tokens, spec.vocab)

    latent, content, terminal = spec.world.transition(state.goal, state.latent, words)

    step_count: int = state.step_count + 1
    done: bool = terminal or step_count >= spec.max_steps

    new_state = replace(state, latent=latent, step_count=step_count, done=done)

    return new_state, _observation(spec, state.goal, content), done


def final_reward(spec: EnvSpec, state: EnvState, goal: Any) -> float:
    if not state.done:
        raise EnvironmentStepError("The final reward is only defined once the episode is done")

    return float(spec.world.final_reward(goal, state.latent))


def progress(spec: EnvSpec, state: EnvState) -> float:
    """partial reward of the state. toylab counts ordered subgoals, the other two only pay when done"""
    return float(spec.world.progress(state.goal, state.latent, state.done))


def is_success(spec: EnvSpec, state: EnvState) -> bool:
    return bool(state.done and spec.world.is_success(state.goal, state.latent))


class Episode:
    """single-owner wrapper around the state of one running episode"""

    def __init__(self, spec: EnvSpec, instruction: Instruction) -> None:
        self.spec: EnvSpec = spec
        self.instruction: Instruction = instruction
        self.state: Optional[EnvState] = None

    def reset(self) -> Tuple[int, ...]:
        self.state, observation = reset(self.spec, self.instruction)
        return observation

    def step(self, action_tokens: Sequence[int]) -> Tuple[Tuple[int, ...], bool]:
        if self.state is None:
            raise EnvironmentStepError("The episode has to be reset before stepping")

        self.state, observation, done = step(self.spec, self.state, action_tokens)
        return observation, done

    @property
    def done(self) -> bool:
        return self.state is not None and self.state.done

    def reward(self) -> float:
        return final_reward(self.spec, self.state, self.state.goal)

    def progress(self) -> float:
        return progress(self.spec, self.state)

    def success(self) -> bool:
        return is_success(self.spec, self.state)


def oracle_expert(spec: EnvSpec, instruction: Instruction, goal: Any) -> Trajectory:
    """Function that plays the world's oracle plan and records it as an expert trajectory

    Parameters

    spec : EnvSpec
        environment of the instruction

    instruction : Instruction
        instruction to solve

    goal : Any
        hidden goal record returned by generate_instruction

    Returns

    Trajectory
        returns the expert trajectory. Its reward is always 1.0
    """
    plan: List[List[str]] = spec.world.plan(goal)

    if len(plan) > spec.max_steps:
        raise OracleError(f"The oracle needs {len(plan)} steps for {instruction.id} but only {spec.max_steps} are allowed")

    episode = Episode(spec, instruction)
    episode.reset()

    steps: List[Step] = []

    for position, words in enumerate(plan):
        if episode.done:
            raise OracleError(f"The oracle plan for {instruction.id} ended early at step {position}")

        action: Tuple[int, ...] = _words_to_tokens(spec.vocab, words) + (spec.vocab.eoa_id,)
        observation, done = episode.step(action)

        steps.append(Step(action, None if position == len(plan) - 1 else observation))

    if not episode.done or episode.reward() != 1.0:
        raise OracleError(f"The oracle plan for {instruction.id} does not reach the goal")

    return Trajectory(
        instruction=instruction,
        steps=tuple(steps),
        reward=1.0,
        source=Source.EXPERT,
        seed=instruction.seed,
    )


@dataclass(frozen=True)
class ReplayResult:
    reward: float
    success: bool
    done: bool
    # partial reward after each action, the reward-vs-step curve
    progress: Tuple[float, ...]
    observations: Tuple[Optional[Tuple[int, ...]], ...]


def replay(spec: EnvSpec, trajectory: Trajectory) -> ReplayResult:
    """re-executes the stored actions. Stops early, with done set, if the episode ends before the last step"""
    episode = Episode(spec, trajectory.instruction)
    episode.reset()

    curve: List[float] = []
    observations: List[Optional[Tuple[int, ...]]] = []

    for position, stored in enumerate(trajectory.steps):
        observation, done = episode.step(stored.action_tokens)
        curve.append(episode.progress())

        is_last: bool = position == len(trajectory.steps) - 1
        observations.append(None if is_last else observation)

        if done and not is_last:
            break

    reward: float = episode.reward() if episode.done else 0.0

    return ReplayResult(
        reward=reward,
        success=episode.success() if episode.done else False,
        done=episode.done and len(observations) == len(trajectory.steps),
        progress=tuple(curve),
        observations=tuple(observations),
    )


def replays_soundly(spec: EnvSpec, trajectory: Trajectory) -> bool:
    """true when replaying the actions reproduces the stored observations, the end of the episode and the reward"""
    result: ReplayResult = replay(spec, trajectory)

    stored: Tuple[Optional[Tuple[int, ...]], ...] = tuple(step.observation_tokens for step in trajectory.steps)

    return result.done and result.reward == trajectory.reward and result.observations == stored

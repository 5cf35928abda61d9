from typing import List

import numpy as np
import pytest

from core import Instruction, Source, Step, Trajectory, Variation, Vocabulary
from envs import EnvSpec, generate_instruction, make_spec, oracle_expert
from policy import Architecture, PolicyParams, init_params

# small network so the finite difference checks stay fast
SMALL = {"embed_dim": 4, "window": 8, "hidden": 8}


def experts_for(spec: EnvSpec, seeds: List[int]) -> List[Trajectory]:
    experts = []
    for seed in seeds:
        instruction, goal = generate_instruction(spec, Variation.SEEN, seed)
        experts.append(oracle_expert(spec, instruction, goal))
    return experts


def random_trajectory(vocab: Vocabulary, rng: np.random.Generator, seed: int) -> Trajectory:
    """a trajectory of random words with random step, action and observation lengths"""
    words = np.arange(vocab.delimiter_id + 1, len(vocab))

    def draw(low: int, high: int):
        return tuple(int(word) for word in rng.choice(words, size=int(rng.integers(low, high + 1))))

    n_steps = int(rng.integers(1, 7))
    steps = tuple(
        Step(draw(0, 4) + (vocab.eoa_id,), None if position == n_steps - 1 else draw(1, 6)) for position in range(n_steps)
    )
    instruction = Instruction(f"toy-seen-{seed}", draw(1, 8), "toy", Variation.SEEN, seed)

    return Trajectory(instruction, steps, float(rng.integers(0, 5)) / 4, Source.ROLLOUT, seed)


@pytest.fixture
def shop() -> EnvSpec:
    return make_spec("toyshop")


@pytest.fixture
def lab() -> EnvSpec:
    return make_spec("toylab")


@pytest.fixture
def house() -> EnvSpec:
    return make_spec("toyhouse")


@pytest.fixture
def vocab(shop):
    return shop.vocab


@pytest.fixture
def small_arch(shop) -> Architecture:
    return Architecture(vocab_size=len(shop.vocab), **SMALL)


@pytest.fixture
def params(small_arch) -> PolicyParams:
    return init_params(small_arch, seed=11)


@pytest.fixture
def reference(small_arch) -> PolicyParams:
    return init_params(small_arch, seed=12)


@pytest.fixture
def shop_experts(shop) -> List[Trajectory]:
    return experts_for(shop, [1, 2, 3, 4])


@pytest.fixture
def output_root(tmp_path, monkeypatch):
    """points the default output root at a temporary directory"""
    monkeypatch.setenv("TOYETO_OUTPUT_ROOT", str(tmp_path / "out"))
    return tmp_path / "out"


@pytest.fixture
def make_experts():
    return experts_for


@pytest.fixture
def make_random_trajectory():
    return random_trajectory

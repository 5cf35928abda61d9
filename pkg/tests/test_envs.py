from dataclasses import replace

import pytest

from core import Source, Variation
from envs import (
    EnvironmentStepError,
    Episode,
    GenerationError,
    N_SUBGOALS,
    RewardKind,
    final_reward,
    generate_instruction,
    goal_for,
    make_spec,
    oracle_expert,
    replay,
    replays_soundly,
    reset,
    step,
)
from envs.toyshop import CATEGORIES_SEEN, CATEGORIES_UNSEEN
from envs.toylab import OBJECTS_SEEN as LAB_SEEN, OBJECTS_UNSEEN as LAB_UNSEEN

ENVIRONMENTS = ["toyshop", "toylab", "toyhouse"]


def _action(spec, text):
    return spec.vocab.tokenize(text) + (spec.vocab.eoa_id,)


def _content(spec, goal, observation):
    """observation words after the goal header"""
    return spec.vocab.to_text(observation[len(spec.world.header(goal)):]).split()


def test_unknown_environment_is_rejected():
    with pytest.raises(GenerationError):
        make_spec("toyfarm")


@pytest.mark.parametrize("name", ENVIRONMENTS)
def test_generation_is_deterministic(name):
    spec = make_spec(name)

    first = generate_instruction(spec, Variation.SEEN, 42)
    second = generate_instruction(spec, Variation.SEEN, 42)

    assert first == second
    assert first[0].id == f"{name}-seen-42"


@pytest.mark.parametrize("name", ENVIRONMENTS)
def test_seeds_outside_the_split_range_are_rejected(name):
    spec = make_spec(name)

    with pytest.raises(GenerationError):
        generate_instruction(spec, Variation.SEEN, spec.unseen_seeds.start)

    with pytest.raises(GenerationError):
        generate_instruction(spec, Variation.UNSEEN, 0)


def test_toyshop_unseen_split_uses_other_categories(shop):
    seen = {generate_instruction(shop, Variation.SEEN, seed)[1].category for seed in range(60)}
    unseen = {
        generate_instruction(shop, Variation.UNSEEN, shop.unseen_seeds.start + seed)[1].category for seed in range(60)
    }

    assert seen <= set(CATEGORIES_SEEN)
    assert unseen <= set(CATEGORIES_UNSEEN)


def test_toylab_unseen_split_uses_other_objects(lab):
    seen = {generate_instruction(lab, Variation.SEEN, seed)[1].target for seed in range(60)}
    unseen = {generate_instruction(lab, Variation.UNSEEN, lab.unseen_seeds.start + seed)[1].target for seed in range(60)}

    assert seen <= set(LAB_SEEN)
    assert unseen <= set(LAB_UNSEEN)


@pytest.mark.parametrize("name", ENVIRONMENTS)
@pytest.mark.parametrize("variation", [Variation.SEEN, Variation.UNSEEN])
def test_oracle_solves_every_instruction(name, variation):
    spec = make_spec(name)
    start = spec.seed_range(variation).start

    for seed in range(start, start + 25):
        instruction, goal = generate_instruction(spec, variation, seed)
        expert = oracle_expert(spec, instruction, goal)

        assert expert.reward == 1.0
        assert expert.source is Source.EXPERT
        assert len(expert) <= spec.max_steps
        assert replays_soundly(spec, expert)


def test_reset_shows_the_goal_header_and_the_first_page(shop):
    instruction, goal = generate_instruction(shop, Variation.SEEN, 5)

    state, observation = reset(shop, instruction)

    assert observation[: len(instruction.tokens)] == instruction.tokens
    assert _content(shop, goal, observation) == ["page", "search"]
    assert state.step_count == 0 and not state.done


def test_unknown_action_prints_nothing_happened(shop):
    instruction, goal = generate_instruction(shop, Variation.SEEN, 5)
    state, _ = reset(shop, instruction)

    new_state, observation, done = step(shop, state, _action(shop, "buy"))

    assert _content(shop, goal, observation) == ["nothing", "happened"]
    assert not done
    assert new_state.latent == state.latent
    assert new_state.step_count == 1


def test_rationale_before_the_delimiter_is_ignored(shop):
    instruction, goal = generate_instruction(shop, Variation.SEEN, 5)
    state, _ = reset(shop, instruction)
    query = f"search {goal.material} {goal.category}"

    _, plain, _ = step(shop, state, _action(shop, query))
    _, reasoned, _ = step(shop, state, _action(shop, f"buy {goal.color} => {query}"))

    assert plain == reasoned


def test_step_limit_ends_the_episode(shop):
    spec = make_spec("toyshop", max_steps=2)
    instruction, goal = generate_instruction(spec, Variation.SEEN, 5)
    state, _ = reset(spec, instruction)

    with pytest.raises(EnvironmentStepError):
        final_reward(spec, state, goal)

    state, _, done = step(spec, state, _action(spec, "buy"))
    assert not done

    state, _, done = step(spec, state, _action(spec, "buy"))
    assert done
    assert final_reward(spec, state, goal) == 0.0

    with pytest.raises(EnvironmentStepError):
        step(spec, state, _action(spec, "buy"))


def test_toyshop_partial_match_reward(shop):
    instruction, goal = generate_instruction(shop, Variation.SEEN, 7)
    episode = Episode(shop, instruction)
    episode.reset()

    # the oracle plan without picking a size
    for text in (f"search {goal.material} {goal.category}", f"click {goal.target_id}", f"select {goal.color}", "buy"):
        _, done = episode.step(_action(shop, text))

    assert done
    assert episode.reward() == 0.75
    assert not episode.success()


def test_toyshop_other_category_is_scored_on_attributes_and_price(shop):
    instruction, goal = generate_instruction(shop, Variation.SEEN, 7)
    other = next(category for category in CATEGORIES_SEEN if category != goal.category)

    episode = Episode(shop, instruction)
    episode.reset()

    observation, _ = episode.step(_action(shop, f"search {goal.material} {other}"))
    first_result = _content(shop, goal, observation)[1]

    episode.step(_action(shop, f"click {first_result}"))
    _, done = episode.step(_action(shop, "buy"))

    product = shop.world.products[first_result]
    # no color or size was selected
    expected = (int(product.material == goal.material) + int(product.price <= goal.budget)) / 4

    assert done
    assert product.category == other
    assert episode.reward() == expected


def _cheap_mismatch(shop):
    """an instruction and a listed product of another category and material that is within budget"""
    for seed in range(50):
        instruction, goal = generate_instruction(shop, Variation.SEEN, seed)
        for category in CATEGORIES_SEEN:
            if category == goal.category:
                continue

            episode = Episode(shop, instruction)
            episode.reset()
            observation, _ = episode.step(_action(shop, f"search {category}"))
            listed = _content(shop, goal, observation)[1::3]

            for product_id in listed:
                product = shop.world.products[product_id]
                if product.material != goal.material and product.price <= goal.budget:
                    return episode, product_id
    return None, None


def test_toyshop_cheap_product_earns_the_price_slot(shop):
    episode, product_id = _cheap_mismatch(shop)
    assert episode is not None

    episode.step(_action(shop, f"click {product_id}"))
    _, done = episode.step(_action(shop, "buy"))

    assert done
    assert episode.reward() == 0.25


def test_toylab_counts_ordered_subgoals(lab):
    instruction, goal = generate_instruction(lab, Variation.SEEN, 3)
    plan = lab.world.plan(goal)
    put = next(position for position, words in enumerate(plan) if words[0] == "put")

    episode = Episode(lab, instruction)
    episode.reset()

    for words in plan[: put + 1]:
        episode.step(_action(lab, " ".join(words)))

    # focus, hold and inside the device
    assert episode.progress() == pytest.approx(3 / N_SUBGOALS)
    assert not episode.done


def test_toylab_wrong_focus_ends_the_episode(lab):
    instruction, goal = generate_instruction(lab, Variation.SEEN, 3)
    distractor = next(obj for room, objects in goal.layout if room == goal.target_room for obj in objects if obj != goal.target)

    episode = Episode(lab, instruction)
    episode.reset()

    for text in (f"open {goal.target_room}", f"go {goal.target_room}"):
        episode.step(_action(lab, text))

    _, done = episode.step(_action(lab, f"focus {distractor}"))

    assert done
    assert episode.reward() == 0.0


def test_toylab_oracle_curve_is_monotone(lab):
    instruction, goal = generate_instruction(lab, Variation.SEEN, 9)
    curve = replay(lab, oracle_expert(lab, instruction, goal)).progress

    assert list(curve) == sorted(curve)
    assert curve[-1] == 1.0


def test_toylab_oracle_length_over_a_hundred_seeds(lab):
    lengths = [len(oracle_expert(lab, *generate_instruction(lab, Variation.SEEN, seed))) for seed in range(100)]

    assert 10 <= sum(lengths) / len(lengths) <= 18


def test_toyhouse_reward_is_binary(house):
    assert house.reward_kind is RewardKind.BINARY

    instruction, goal = generate_instruction(house, Variation.SEEN, 4)
    expert = oracle_expert(house, instruction, goal)

    episode = Episode(house, instruction)
    episode.reset()
    for stored in expert.steps[:-1]:
        episode.step(stored.action_tokens)

    # one action short of the goal nothing is paid
    assert episode.progress() == 0.0
    assert replay(house, expert).reward == 1.0


def test_foreign_instruction_is_rejected(shop, lab):
    instruction, _ = generate_instruction(lab, Variation.SEEN, 1)

    with pytest.raises(EnvironmentStepError):
        goal_for(shop, instruction)


def test_replay_detects_a_wrong_reward(shop):
    instruction, goal = generate_instruction(shop, Variation.SEEN, 2)
    expert = oracle_expert(shop, instruction, goal)

    assert replays_soundly(shop, expert)
    assert not replays_soundly(shop, replace(expert, reward=0.5))


def test_episode_has_to_be_reset_before_stepping(shop):
    instruction, _ = generate_instruction(shop, Variation.SEEN, 2)

    with pytest.raises(EnvironmentStepError):
        Episode(shop, instruction).step(_action(shop, "buy"))

import math
from dataclasses import replace

import numpy as np
import pytest

from algorithms import (
    SFT_STAGE,
    EtoConfig,
    EtoVariant,
    PgConfig,
    RftConfig,
    Scale,
    SelfPlayConfig,
    SelfPlayMode,
    TrainConfig,
    TrainingAbortedError,
    augment_dataset,
    behavioral_cloning,
    best_of_n,
    child_seed,
    collect_rollouts,
    eto,
    explore_and_pair,
    explore_steps,
    fit,
    minibatches,
    pg_baseline,
    phase_defaults,
    rft,
    self_play,
    self_play_pairs,
)
from core import InvalidTrajectoryError, Source, Variation, flatten
from envs import generate_instruction
from losses import sft_loss
from policy import Architecture, InvalidInputError, RolloutConfig, init_params, rollout

NO_EPOCHS = TrainConfig(lr=1e-2, epochs=0, batch_size=4)
ONE_EPOCH = TrainConfig(lr=1e-3, epochs=1, batch_size=2)


def test_child_seed_is_deterministic_and_spreads():
    assert child_seed(3, 1, 2) == child_seed(3, 1, 2)
    assert len({child_seed(3, stage) for stage in range(8)}) == 8


def test_phase_defaults_by_scale():
    pretrained = phase_defaults(Scale.PRETRAINED)
    desk = phase_defaults(Scale.DESK)

    assert (pretrained["sft"].lr, pretrained["sft"].epochs, pretrained["sft"].batch_size) == (1e-5, 3, 64)
    assert (pretrained["dpo"].lr, pretrained["dpo"].batch_size) == (1e-6, 32)
    assert pretrained["step"].lr == 1e-7
    # desk keeps the ratio between the phases
    assert desk["sft"].lr / desk["dpo"].lr == pytest.approx(pretrained["sft"].lr / pretrained["dpo"].lr)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        TrainConfig(lr=1e-3, epochs=1, batch_size=0)

    with pytest.raises(InvalidInputError):
        EtoConfig(iterations=-1)

    with pytest.raises(InvalidInputError):
        SelfPlayConfig(k=1)

    with pytest.raises(InvalidInputError):
        RftConfig(threshold=0.0)


def test_minibatches_cover_every_item_once():
    batches = minibatches(list(range(10)), 4, np.random.default_rng(0))

    assert [len(batch) for batch in batches] == [4, 4, 2]
    assert sorted(item for batch in batches for item in batch) == list(range(10))


def test_behavioral_cloning_without_epochs_returns_the_input(params, shop_experts, vocab):
    trained, report = behavioral_cloning(params, shop_experts, vocab, NO_EPOCHS, seed=0)

    assert trained.same_as(params)
    assert report.n_steps == 0


def test_behavioral_cloning_lowers_the_sft_loss(params, shop_experts, vocab):
    flats = [flatten(expert, vocab) for expert in shop_experts]

    trained, report = behavioral_cloning(
        params, shop_experts, vocab, TrainConfig(lr=1e-2, epochs=20, batch_size=4), seed=0
    )

    assert report.n_steps == 20
    assert report.epoch_losses[-1] < report.epoch_losses[0]
    assert sft_loss(trained, flats)[0] < sft_loss(params, flats)[0]


def test_behavioral_cloning_only_accepts_expert_rewards(params, shop_experts, vocab):
    with pytest.raises(InvalidTrajectoryError):
        behavioral_cloning(params, [], vocab, NO_EPOCHS, seed=0)

    with pytest.raises(InvalidTrajectoryError):
        behavioral_cloning(params, [replace(shop_experts[0], reward=0.5)], vocab, NO_EPOCHS, seed=0)


def test_training_aborts_on_a_non_finite_loss(params):
    with pytest.raises(TrainingAbortedError) as caught:
        fit(params, [1, 2], lambda current, batch: (float("nan"), np.zeros(current.arch.n_params)), ONE_EPOCH, 0, "nan")

    assert caught.value.last_params.same_as(params)


def test_training_aborts_on_a_non_finite_gradient(params):
    def batch_loss(current, batch):
        grad = np.zeros(current.arch.n_params)
        grad[0] = np.inf
        return 1.0, grad

    with pytest.raises(TrainingAbortedError):
        fit(params, [1, 2], batch_loss, ONE_EPOCH, 0, "inf")


def test_collect_rollouts_keeps_request_order(params, shop, shop_experts):
    requests = [
        (expert.instruction, RolloutConfig(temperature=1.0, seed=index), ()) for index, expert in enumerate(shop_experts)
    ]

    serial = collect_rollouts(params, shop, requests, cores=1)
    parallel = collect_rollouts(params, shop, requests, cores=2)

    assert serial == parallel
    assert [trajectory.instruction.id for trajectory in serial] == [expert.instruction.id for expert in shop_experts]


def test_explore_and_pair_pairs_against_the_expert(params, shop, shop_experts):
    result = explore_and_pair(params, shop_experts, shop, temperature=1.0, rollouts_per_instruction=2, seed=1)

    assert len(result.rollouts) == 2 * len(shop_experts)
    assert sum(result.reward_counts.values()) == len(result.rollouts)

    for pair in result.pairs:
        assert pair.winner.reward > pair.loser.reward
        assert pair.winner.source is Source.EXPERT


def test_explore_and_pair_skips_experts_that_do_not_replay(params, shop, shop_experts):
    broken = replace(shop_experts[0], reward=0.5)

    result = explore_and_pair(params, [broken, *shop_experts[1:]], shop)

    assert result.skipped == [broken.instruction.id]
    assert len(result.rollouts) == len(shop_experts) - 1


def test_explore_steps_builds_ordered_action_pairs(params, shop, shop_experts):
    pairs = explore_steps(params, shop_experts, shop, temperature=1.0, seed=2)

    assert len(pairs) <= len(shop_experts)
    for pair in pairs:
        assert pair.winner_reward > pair.loser_reward
        assert pair.winner_action != pair.loser_action
        assert all(step.observation_tokens is not None for step in pair.prefix)


def test_eto_without_iterations_is_behavioral_cloning(params, shop, shop_experts):
    sft = TrainConfig(lr=1e-2, epochs=2, batch_size=2)
    evaluated = []

    trained, report = eto(
        params, shop_experts, shop, EtoConfig(sft=sft, iterations=0, seed=4),
        evaluate=lambda iteration, current: evaluated.append(iteration),
    )
    cloned, _ = behavioral_cloning(params, shop_experts, shop.vocab, sft, seed=child_seed(4, SFT_STAGE))

    assert trained.same_as(cloned)
    assert report.iterations == []
    assert evaluated == [0]


def test_eto_iteration_starts_at_ln2(params, shop, shop_experts):
    evaluated = []
    cfg = EtoConfig(sft=NO_EPOCHS, dpo=ONE_EPOCH, iterations=1, explore_temperature=1.0)

    _, report = eto(params, shop_experts, shop, cfg, evaluate=lambda iteration, current: evaluated.append(iteration))

    iteration = report.iterations[0]
    assert iteration.n_pairs > 0
    assert iteration.first_loss == pytest.approx(math.log(2.0), abs=1e-9)
    assert iteration.train.n_steps == math.ceil(iteration.n_pairs / ONE_EPOCH.batch_size)
    assert evaluated == [0, 1]


@pytest.mark.parametrize("variant", [EtoVariant.STEP, EtoVariant.MIXTURE])
def test_eto_step_variants_run(params, shop, shop_experts, variant):
    cfg = EtoConfig(
        sft=NO_EPOCHS, dpo=ONE_EPOCH, step=ONE_EPOCH, iterations=1, explore_temperature=1.0, variant=variant
    )

    _, report = eto(params, shop_experts, shop, cfg)

    iteration = report.iterations[0]
    if iteration.train is not None and iteration.train.n_steps > 0:
        assert iteration.first_loss == pytest.approx(math.log(2.0), abs=1e-9)
    else:
        assert report.stopped_early


def test_augment_dataset_is_experts_plus_good_rollouts(params, shop, shop_experts):
    rollouts = [
        rollout(params, shop, expert.instruction, RolloutConfig(temperature=1.0, seed=index))
        for index, expert in enumerate(shop_experts)
    ]
    rollouts.append(replace(shop_experts[0], source=Source.ROLLOUT))

    augmented = augment_dataset(shop_experts, rollouts, 0.7)

    assert augmented[: len(shop_experts)] == shop_experts
    assert augmented[len(shop_experts):] == [trajectory for trajectory in rollouts if trajectory.reward >= 0.7]
    assert augmented[-1].source is Source.ROLLOUT


def test_rft_reports_the_augmented_set(params, shop, shop_experts):
    cfg = RftConfig(sft=ONE_EPOCH, k=2, threshold=0.7)

    _, report = rft(params, shop_experts, shop, cfg)

    assert report.n_experts == len(shop_experts)
    assert report.augmented[: len(shop_experts)] == shop_experts
    assert all(trajectory.reward >= 0.7 for trajectory in report.augmented[len(shop_experts):])
    assert report.n_added == len(report.augmented) - len(shop_experts)


def test_best_of_one_is_a_single_sampled_rollout(params, shop, shop_experts):
    instruction = shop_experts[0].instruction

    best = best_of_n(params, shop, instruction, n=1, seed=7)
    single = rollout(params, shop, instruction, RolloutConfig(temperature=1.0, seed=child_seed(7, 0)))

    assert best == single


def test_best_of_n_keeps_the_highest_reward(params, shop, shop_experts):
    instruction = shop_experts[1].instruction
    samples = [
        rollout(params, shop, instruction, RolloutConfig(temperature=1.0, seed=child_seed(3, index))) for index in range(6)
    ]

    best = best_of_n(params, shop, instruction, n=6, seed=3)
    smaller = best_of_n(params, shop, instruction, n=3, seed=3)

    assert best.reward == max(sample.reward for sample in samples)
    assert best == next(sample for sample in samples if sample.reward == best.reward)
    assert best.reward >= smaller.reward


def test_best_of_n_needs_a_sample(params, shop, shop_experts):
    with pytest.raises(InvalidInputError):
        best_of_n(params, shop, shop_experts[0].instruction, n=0)


def test_pg_baseline_reports_every_batch(params, shop, shop_experts):
    cfg = PgConfig(train=ONE_EPOCH, beta=0.1)

    _, report = pg_baseline(params, [expert.instruction for expert in shop_experts], shop, cfg)

    assert len(report.batch_rewards) == 2
    assert len(report.grad_norms) == 2
    # the first batch is drawn before any update, so the policy still equals its reference
    assert report.batch_kl[0] == pytest.approx(0.0, abs=1e-12)
    assert report.train.n_steps == 2


def test_pg_baseline_skips_batches_the_environment_refuses(params, shop, lab):
    foreign = [generate_instruction(lab, Variation.SEEN, seed)[0] for seed in (1, 2, 3, 4)]

    trained, report = pg_baseline(params, foreign, shop, PgConfig(train=ONE_EPOCH, beta=0.1))

    assert report.skipped_batches == 2
    assert report.batch_rewards == []
    assert report.to_dict()["skipped_batches"] == 2
    # zero gradients move nothing without weight decay
    assert trained.same_as(params)


def test_self_play_pairs_best_against_every_worse_sample(params, shop, shop_experts):
    base = rollout(params, shop, shop_experts[0].instruction, RolloutConfig(temperature=1.0, seed=0))
    group = [replace(base, reward=reward) for reward in (0.5, 1.0, 0.0, 1.0)]

    pairs = self_play_pairs(group)

    assert len(pairs) == 2 <= len(group) - 1
    assert all(pair.winner is group[1] for pair in pairs)
    assert [pair.loser.reward for pair in pairs] == [0.5, 0.0]

    assert self_play_pairs([]) == []
    assert self_play_pairs([replace(base, reward=0.25)] * 3) == []


@pytest.mark.parametrize("mode", list(SelfPlayMode))
def test_self_play_stages_without_data_leave_the_policy_alone(params, shop, shop_experts, mode):
    cfg = SelfPlayConfig(sft=ONE_EPOCH, dpo=ONE_EPOCH, k=2)

    trained, report = self_play(params, [expert.instruction for expert in shop_experts], shop, cfg, mode)

    assert report.mode is mode
    if report.sft is None and report.dpo is None:
        assert trained.same_as(params)
        assert report.empty_stages
    if mode is SelfPlayMode.RFT_ONLY:
        assert report.dpo is None and report.n_pairs == 0
    if mode is SelfPlayMode.ETO_ONLY:
        assert report.sft is None and report.n_rft_added == 0


def test_explore_and_pair_with_a_policy_that_replays_the_experts(params, shop, shop_experts, monkeypatch):
    def replay_experts(current, spec, requests, cores=1):
        by_id = {expert.instruction.id: expert for expert in shop_experts}
        return [replace(by_id[instruction.id], source=Source.ROLLOUT) for instruction, _, _ in requests]

    monkeypatch.setattr("algorithms.exploration.collect_rollouts", replay_experts)

    result = explore_and_pair(params, shop_experts, shop)

    assert len(result.rollouts) == len(shop_experts)
    # every rollout ties its expert
    assert result.pairs == []


def test_behavioral_cloning_memorizes_a_single_trajectory(shop, shop_experts, vocab):
    params = init_params(Architecture(vocab_size=len(vocab)), seed=5)
    expert = shop_experts[0]
    flats = [flatten(expert, vocab)]

    trained, report = behavioral_cloning(
        params, [expert], vocab, TrainConfig(lr=1e-2, epochs=200, batch_size=1), seed=0
    )

    initial = sft_loss(params, flats)[0]
    final = sft_loss(trained, flats)[0]

    assert report.n_steps == 200
    assert final < initial
    assert final < 0.1 * initial


def test_pg_baseline_with_a_large_beta_keeps_the_greedy_rollouts(shop, shop_experts, vocab):
    start = init_params(Architecture(vocab_size=len(vocab)), seed=5)
    cloned, _ = behavioral_cloning(start, shop_experts, vocab, TrainConfig(lr=1e-2, epochs=40, batch_size=2), seed=0)
    instructions = [expert.instruction for expert in shop_experts]

    trained, _ = pg_baseline(
        cloned, instructions, shop, PgConfig(train=TrainConfig(lr=1e-5, epochs=1, batch_size=2), beta=100.0)
    )

    for instruction in instructions:
        before = rollout(cloned, shop, instruction, RolloutConfig())
        after = rollout(trained, shop, instruction, RolloutConfig())

        assert after.actions == before.actions
        assert after.reward == before.reward

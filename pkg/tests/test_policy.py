import math

import numpy as np
import pytest

from core import Variation, flatten
from envs import EnvironmentStepError, generate_instruction, oracle_expert, replays_soundly
from losses import grad_check
from policy import (
    ACTION_BUDGET,
    Architecture,
    CheckpointError,
    InvalidInputError,
    PolicyParams,
    RolloutConfig,
    batch_logprobs,
    forward,
    init_params,
    left_pad,
    load_checkpoint,
    log_softmax,
    rollout,
    sample_token,
    save_checkpoint,
    sequence_contexts,
    token_kl,
    token_logits,
    trajectory_logprob,
    trajectory_logprob_grad,
    unpack,
    zeros,
)


@pytest.fixture
def expert(shop):
    instruction, goal = generate_instruction(shop, Variation.SEEN, 8)
    return oracle_expert(shop, instruction, goal)


def test_architecture_counts_parameters():
    arch = Architecture(vocab_size=10, embed_dim=2, window=3, hidden=4)

    assert arch.n_params == 10 * 2 + 3 * 2 * 4 + 4 + 4 * 10 + 10
    assert sum(int(np.prod(shape)) for shape in arch.shapes().values()) == arch.n_params
    assert Architecture.from_dict(arch.to_dict()) == arch


def test_params_are_validated(small_arch):
    with pytest.raises(InvalidInputError):
        PolicyParams(small_arch, np.zeros(small_arch.n_params - 1))

    theta = np.zeros(small_arch.n_params)
    theta[3] = np.nan
    with pytest.raises(InvalidInputError):
        PolicyParams(small_arch, theta)


def test_params_are_read_only(params):
    with pytest.raises(ValueError):
        params.theta[0] = 1.0


def test_unpack_returns_views(small_arch):
    theta = np.zeros(small_arch.n_params)
    unpack(small_arch, theta)["b2"][...] = 1.0

    assert theta[-small_arch.vocab_size:].sum() == small_arch.vocab_size


def test_zero_params_give_uniform_logits(small_arch, expert, vocab):
    flat = flatten(expert, vocab)

    assert np.all(token_logits(zeros(small_arch), [vocab.inst_id]) == 0.0)
    assert trajectory_logprob(zeros(small_arch), flat) == pytest.approx(
        flat.n_action_tokens * math.log(1.0 / small_arch.vocab_size)
    )


def test_short_contexts_are_left_padded(params):
    window = params.arch.window
    context = [1, 7, 9]

    assert np.array_equal(left_pad(context, window)[-3:], context)
    assert np.array_equal(token_logits(params, context), token_logits(params, [0] * 4 + context))


def test_only_the_last_window_is_read(params):
    window = params.arch.window
    long_context = list(range(1, window + 6))

    assert np.array_equal(token_logits(params, long_context), token_logits(params, long_context[-window:]))


def test_sequence_contexts_hold_the_preceding_tokens():
    contexts = sequence_contexts(np.array([5, 6, 7]), 2)

    assert contexts.tolist() == [[0, 0], [0, 5], [5, 6]]


def test_log_softmax_is_normalized(params, expert, vocab):
    flat = flatten(expert, vocab)
    cache = forward(params, sequence_contexts(flat.token_ids, params.arch.window))

    assert np.allclose(np.exp(cache.logprobs).sum(axis=1), 1.0)
    assert np.allclose(log_softmax(np.array([1000.0, 1000.0])), math.log(0.5))


def test_logprob_matches_a_token_by_token_recompute(params, expert, vocab):
    flat = flatten(expert, vocab)
    tokens = flat.token_ids.tolist()

    expected = sum(
        log_softmax(token_logits(params, tokens[:position]))[tokens[position]]
        for position in np.flatnonzero(flat.action_mask)
    )

    assert trajectory_logprob(params, flat) == pytest.approx(expected, abs=1e-10)


def test_batch_logprobs_are_per_sequence(params, shop_experts, vocab):
    flats = [flatten(expert, vocab) for expert in shop_experts]

    values, _ = batch_logprobs(params, flats)

    assert values == pytest.approx([trajectory_logprob(params, flat) for flat in flats])


def test_logprob_gradient_matches_finite_differences(params, expert, vocab):
    flat = flatten(expert, vocab)

    error = grad_check(lambda current: (trajectory_logprob(current, flat), trajectory_logprob_grad(current, flat)), params)

    assert error < 1e-4


def test_unused_embedding_rows_get_no_gradient(params, expert, vocab):
    flat = flatten(expert, vocab)
    used = set(flat.token_ids.tolist()) | {0}
    unused = [token for token in range(len(vocab)) if token not in used]

    grad_E = unpack(params.arch, trajectory_logprob_grad(params, flat))["E"]

    assert unused
    assert np.all(grad_E[unused] == 0.0)


def test_invalid_token_ids_are_rejected(params):
    with pytest.raises(InvalidInputError):
        token_logits(params, [params.arch.vocab_size])


def test_token_kl_vanishes_against_itself(params, shop_experts, vocab):
    flats = [flatten(expert, vocab) for expert in shop_experts]

    kl, grad = token_kl(params, params, flats)

    assert np.allclose(kl, 0.0)
    assert np.allclose(grad, 0.0)


def test_token_kl_gradient_matches_finite_differences(params, reference, shop_experts, vocab):
    flats = [flatten(expert, vocab) for expert in shop_experts[:2]]

    def kl_sum(current):
        kl, grad = token_kl(current, reference, flats)
        return float(kl.sum()), grad

    assert token_kl(params, reference, flats)[0].min() > 0.0
    assert grad_check(kl_sum, params) < 1e-4


def test_sample_token_is_greedy_at_zero_temperature():
    rng = np.random.default_rng(0)

    assert sample_token(np.array([0.1, 3.0, 3.0, -1.0]), 0.0, rng) == 1


def test_sample_token_follows_the_distribution():
    rng = np.random.default_rng(0)
    logits = np.log(np.array([0.7, 0.2, 0.1]))

    draws = np.bincount([sample_token(logits, 1.0, rng) for _ in range(4000)], minlength=3) / 4000

    assert draws == pytest.approx([0.7, 0.2, 0.1], abs=0.03)


def test_negative_temperature_is_rejected():
    with pytest.raises(InvalidInputError):
        RolloutConfig(temperature=-0.5)


def test_greedy_rollouts_do_not_depend_on_the_seed(params, shop, expert):
    first = rollout(params, shop, expert.instruction, RolloutConfig(temperature=0.0, seed=1))
    second = rollout(params, shop, expert.instruction, RolloutConfig(temperature=0.0, seed=2))

    assert first.actions == second.actions
    assert first.reward == second.reward


def test_sampled_rollouts_are_reproducible_and_replay(params, shop, expert, vocab):
    cfg = RolloutConfig(temperature=1.0, seed=5)

    first = rollout(params, shop, expert.instruction, cfg)
    second = rollout(params, shop, expert.instruction, cfg)

    assert first == second
    assert replays_soundly(shop, first)
    for action in first.actions:
        assert action[-1] == vocab.eoa_id
        assert len(action) <= ACTION_BUDGET


def test_rollout_respects_the_step_limit(params, shop, expert):
    trajectory = rollout(params, shop, expert.instruction, RolloutConfig(temperature=1.0, max_steps=3, seed=4))

    assert len(trajectory) <= 3


def test_rollout_teacher_forces_the_prefix(params, shop, expert):
    trajectory = rollout(params, shop, expert.instruction, RolloutConfig(seed=3), prefix=expert.steps[:2])

    assert trajectory.steps[:2] == expert.steps[:2]


def test_prefix_that_ends_the_episode_is_rejected(params, shop, expert):
    with pytest.raises(EnvironmentStepError):
        rollout(params, shop, expert.instruction, RolloutConfig(), prefix=expert.steps)


def test_checkpoint_round_trip(tmp_path, params, vocab):
    path = save_checkpoint(tmp_path / "policy.ckpt", params, vocab)

    assert load_checkpoint(path, vocab).same_as(params)


def test_checkpoint_rejects_another_vocabulary(tmp_path, params, vocab, lab):
    path = save_checkpoint(tmp_path / "policy.ckpt", params, vocab)

    with pytest.raises(CheckpointError):
        load_checkpoint(path, lab.vocab)


def test_checkpoint_rejects_truncated_files(tmp_path, params, vocab):
    path = save_checkpoint(tmp_path / "policy.ckpt", params, vocab)
    path.write_bytes(path.read_bytes()[:-8])

    with pytest.raises(CheckpointError):
        load_checkpoint(path, vocab)

    (tmp_path / "other.ckpt").write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "other.ckpt", vocab)


def test_init_params_is_seeded(small_arch):
    assert init_params(small_arch, 3).same_as(init_params(small_arch, 3))
    assert not init_params(small_arch, 3).same_as(init_params(small_arch, 4))
    assert np.all(unpack(small_arch, init_params(small_arch, 3).theta)["b1"] == 0.0)


def test_only_action_positions_contribute_to_the_logprob(params, vocab, make_random_trajectory):
    rng = np.random.default_rng(6)

    for seed in range(100):
        flat = flatten(make_random_trajectory(vocab, rng, seed), vocab)
        tokens = flat.token_ids.tolist()

        expected = sum(
            log_softmax(token_logits(params, tokens[:position]))[tokens[position]]
            for position in np.flatnonzero(flat.action_mask)
        )

        assert trajectory_logprob(params, flat) == pytest.approx(expected, abs=1e-10)

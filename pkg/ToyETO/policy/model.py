from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core import FlatSequence

from .errors import InvalidInputError
from .params import Architecture, PolicyParams, unpack

PAD_ID: int = 0


@dataclass
class ForwardCache:
    contexts: np.ndarray
    embedded: np.ndarray
    hidden: np.ndarray
    logits: np.ndarray
    logprobs: np.ndarray


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted: np.ndarray = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _check_ids(token_ids: np.ndarray, arch: Architecture) -> None:
    if token_ids.size and (token_ids.min() < 0 or token_ids.max() >= arch.vocab_size):
        bad = token_ids[(token_ids < 0) | (token_ids >= arch.vocab_size)][0]
        raise InvalidInputError(f"The token id {int(bad)} is outside of the vocabulary of size {arch.vocab_size}")


def forward(params: PolicyParams, contexts: np.ndarray) -> ForwardCache:
    """Function that runs the network on a batch of contexts

    Parameters

    params : PolicyParams
        policy parameters

    contexts : np.ndarray
        integer array of shape (n, W), already left padded

    Returns

    ForwardCache
        returns the activations the backward pass needs plus the logits and log-probabilities
    """
    blocks: Dict[str, np.ndarray] = params.blocks

    embedded: np.ndarray = blocks["E"][contexts].reshape(len(contexts), -1)
    hidden: np.ndarray = np.tanh(embedded @ blocks["W1"] + blocks["b1"])
    logits: np.ndarray = hidden @ blocks["W2"] + blocks["b2"]

    return ForwardCache(contexts, embedded, hidden, logits, log_softmax(logits))


def backward(params: PolicyParams, cache: ForwardCache, dlogits: np.ndarray) -> np.ndarray:
    """Function that back-propagates a gradient on the logits to the flat parameter vector

    Parameters

    params : PolicyParams
        parameters the cache was computed with

    cache : ForwardCache
        result of forward

    dlogits : np.ndarray
        gradient of the objective with respect to every row of logits

    Returns

    np.ndarray
        returns the gradient with the same layout as params.theta
    """
    arch: Architecture = params.arch
    blocks: Dict[str, np.ndarray] = params.blocks

    grad: np.ndarray = np.zeros(arch.n_params)
    out: Dict[str, np.ndarray] = unpack(arch, grad)

    out["W2"][...] = cache.hidden.T @ dlogits
    out["b2"][...] = dlogits.sum(axis=0)

    dpre: np.ndarray = (dlogits @ blocks["W2"].T) * (1.0 - cache.hidden ** 2)

    out["W1"][...] = cache.embedded.T @ dpre
    out["b1"][...] = dpre.sum(axis=0)

    dembedded: np.ndarray = (dpre @ blocks["W1"].T).reshape(len(cache.contexts), arch.window, arch.embed_dim)
    # unbuffered scatter, repeated token ids accumulate in a fixed order
    np.add.at(out["E"], cache.contexts, dembedded)

    return grad


def left_pad(context: Sequence[int], window: int) -> np.ndarray:
    tokens: np.ndarray = np.asarray(context, dtype=np.int64)[-window:] if len(context) else np.zeros(0, np.int64)
    return np.concatenate([np.full(window - len(tokens), PAD_ID, dtype=np.int64), tokens])


def token_logits(params: PolicyParams, context: Sequence[int]) -> np.ndarray:
    """logits of the next token given the preceding tokens. Only the last W are read, shorter contexts are left padded"""
    padded: np.ndarray = left_pad(context, params.arch.window)
    _check_ids(padded, params.arch)

    return forward(params, padded[None, :]).logits[0]


def sequence_contexts(token_ids: np.ndarray, window: int) -> np.ndarray:
    """row k holds the W tokens before position k, left padded"""
    padded: np.ndarray = np.concatenate([np.full(window, PAD_ID, dtype=np.int64), token_ids])
    return sliding_window_view(padded, window)[: len(token_ids)]


@dataclass
class BatchCache:
    forward: Optional[ForwardCache]
    targets: np.ndarray
    segments: np.ndarray
    n_sequences: int


def batch_logprobs(params: PolicyParams, flats: Sequence[FlatSequence]) -> Tuple[np.ndarray, BatchCache]:
    """Function that computes log pi(e|u) for many flat sequences in one forward pass

    Parameters

    params : PolicyParams
        policy parameters

    flats : Sequence[FlatSequence]
        sequences built by core.flatten or core.flatten_action

    Returns

    Tuple[np.ndarray, BatchCache]
        returns the per-sequence sums of masked token log-probabilities and the cache that
        weighted_grad back-propagates through. Unmasked positions are never evaluated
    """
    window: int = params.arch.window

    contexts, targets, segments = [], [], []

    for index, flat in enumerate(flats):
        _check_ids(flat.token_ids, params.arch)

        positions: np.ndarray = np.flatnonzero(flat.action_mask)
        contexts.append(sequence_contexts(flat.token_ids, window)[positions])
        targets.append(flat.token_ids[positions])
        segments.append(np.full(len(positions), index, dtype=np.int64))

    n_sequences: int = len(flats)

    if not flats or sum(len(target) for target in targets) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return np.zeros(n_sequences), BatchCache(None, empty, empty, n_sequences)

    all_contexts: np.ndarray = np.concatenate(contexts)
    all_targets: np.ndarray = np.concatenate(targets)
    all_segments: np.ndarray = np.concatenate(segments)

    cache: ForwardCache = forward(params, all_contexts)

    picked: np.ndarray = cache.logprobs[np.arange(len(all_targets)), all_targets]
    values: np.ndarray = np.bincount(all_segments, weights=picked, minlength=n_sequences)

    return values, BatchCache(cache, all_targets, all_segments, n_sequences)


def weighted_grad(params: PolicyParams, batch: BatchCache, weights: np.ndarray) -> np.ndarray:
    """gradient of sum_i weights[i] * log pi(e_i|u_i) from a cache of batch_logprobs"""
    if batch.forward is None:
        return np.zeros(params.arch.n_params)

    # d log p[target] / d logits = onehot(target) - p
    dlogits: np.ndarray = -np.exp(batch.forward.logprobs)
    dlogits[np.arange(len(batch.targets)), batch.targets] += 1.0
    dlogits *= np.asarray(weights, dtype=np.float64)[batch.segments][:, None]

    return backward(params, batch.forward, dlogits)


def trajectory_logprob(params: PolicyParams, flat: FlatSequence) -> float:
    values, _ = batch_logprobs(params, [flat])
    return float(values[0])


def trajectory_logprob_grad(params: PolicyParams, flat: FlatSequence) -> np.ndarray:
    """Function that returns the exact gradient of log pi(e|u)

    Parameters

    params : PolicyParams
        policy parameters

    flat : FlatSequence
        flat trajectory

    Returns

    np.ndarray
        returns d log pi(e|u) / d theta. A sequence without action tokens gives the zero vector
    """
    _, batch = batch_logprobs(params, [flat])
    return weighted_grad(params, batch, np.ones(1))


def token_kl(
    params: PolicyParams,
    ref: PolicyParams,
    flats: Sequence[FlatSequence],
    weights: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Function that computes the exact per-position KL(pi_theta || pi_ref) summed over action positions

    Parameters

    params : PolicyParams
        current policy

    ref : PolicyParams
        frozen reference policy. No gradient flows into it

    flats : Sequence[FlatSequence]
        flat sequences whose masked positions are compared

    weights : Optional[np.ndarray]
        per-sequence weights of the gradient. Defaults to all ones

    Returns

    Tuple[np.ndarray, np.ndarray]
        returns the per-sequence KL sums and the gradient of sum_i weights[i] * KL_i
    """
    _, batch = batch_logprobs(params, flats)
    weights = np.ones(len(flats)) if weights is None else np.asarray(weights, dtype=np.float64)

    if batch.forward is None:
        return np.zeros(len(flats)), np.zeros(params.arch.n_params)

    log_p: np.ndarray = batch.forward.logprobs
    log_q: np.ndarray = forward(ref, batch.forward.contexts).logprobs
    p: np.ndarray = np.exp(log_p)

    per_position: np.ndarray = (p * (log_p - log_q)).sum(axis=1)
    kl: np.ndarray = np.bincount(batch.segments, weights=per_position, minlength=batch.n_sequences)

    # dKL/dz_j = p_j (log p_j - log q_j - KL)
    dlogits: np.ndarray = p * (log_p - log_q - per_position[:, None])
    dlogits *= weights[batch.segments][:, None]

    return kl, backward(params, batch.forward, dlogits)

"""Numba kernels for collapsed Gibbs sampling.

The sampler uses a self-contained splitmix64 generator so that chains are
bit-identical for a given seed regardless of platform or numpy version. Each
token resample consumes exactly one uniform draw.

Fold-in isolation is enforced at compile time: the held-out kernels receive
the model's count matrices as read-only arrays, so a store into them would be
a typing error.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(inline="always")
def _next_uniform(state):
    """Advance the splitmix64 state and return a uniform draw in [0, 1)."""
    state[0] = state[0] + _GAMMA
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)) * _INV_2_53


def make_state(seed: int) -> np.ndarray:
    """One-element uint64 array holding the generator state."""
    return np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)


@njit(cache=True)
def init_assignments(tokens, doc_of_token, n_docs, n_topics, n_terms, state):
    """Assign a random topic to every token and build the count matrices."""
    z = np.empty(tokens.shape[0], dtype=np.int32)
    n_dt = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_wt = np.zeros((n_topics, n_terms), dtype=np.int64)
    n_t = np.zeros(n_topics, dtype=np.int64)
    for i in range(tokens.shape[0]):
        k = int(_next_uniform(state) * n_topics)
        z[i] = k
        n_dt[doc_of_token[i], k] += 1
        n_wt[k, tokens[i]] += 1
        n_t[k] += 1
    return z, n_dt, n_wt, n_t


@njit(cache=True)
def train_sweep(tokens, doc_of_token, z, n_dt, n_wt, n_t, alpha, beta, state):
    """One full collapsed Gibbs sweep over all training tokens (in place)."""
    n_topics = n_wt.shape[0]
    v_beta = n_wt.shape[1] * beta
    inv_nt = np.empty(n_topics, dtype=np.float64)
    for k in range(n_topics):
        inv_nt[k] = 1.0 / (n_t[k] + v_beta)
    probs = np.empty(n_topics, dtype=np.float64)

    for i in range(tokens.shape[0]):
        w = tokens[i]
        d = doc_of_token[i]
        k_old = z[i]
        n_dt[d, k_old] -= 1
        n_wt[k_old, w] -= 1
        n_t[k_old] -= 1
        inv_nt[k_old] = 1.0 / (n_t[k_old] + v_beta)

        total = 0.0
        for k in range(n_topics):
            p = (n_wt[k, w] + beta) * inv_nt[k] * (n_dt[d, k] + alpha)
            probs[k] = p
            total += p

        u = _next_uniform(state) * total
        acc = 0.0
        k_new = n_topics - 1
        for k in range(n_topics):
            acc += probs[k]
            if u < acc:
                k_new = k
                break

        z[i] = k_new
        n_dt[d, k_new] += 1
        n_wt[k_new, w] += 1
        n_t[k_new] += 1
        inv_nt[k_new] = 1.0 / (n_t[k_new] + v_beta)


@njit(cache=True)
def foldin_init(tokens, n_topics, state):
    """Random initial assignments for a single held-out document."""
    z = np.empty(tokens.shape[0], dtype=np.int32)
    n_dk = np.zeros(n_topics, dtype=np.int64)
    for i in range(tokens.shape[0]):
        k = int(_next_uniform(state) * n_topics)
        z[i] = k
        n_dk[k] += 1
    return z, n_dk


@njit(cache=True)
def foldin_sweep(tokens, z, n_dk, model_nwt, model_nt, alpha, beta, state):
    """One Gibbs sweep for a held-out document against frozen model counts."""
    n_topics = model_nwt.shape[0]
    v_beta = model_nwt.shape[1] * beta
    inv_nt = np.empty(n_topics, dtype=np.float64)
    for k in range(n_topics):
        inv_nt[k] = 1.0 / (model_nt[k] + v_beta)
    probs = np.empty(n_topics, dtype=np.float64)

    for i in range(tokens.shape[0]):
        w = tokens[i]
        k_old = z[i]
        n_dk[k_old] -= 1

        total = 0.0
        for k in range(n_topics):
            p = (model_nwt[k, w] + beta) * inv_nt[k] * (n_dk[k] + alpha)
            probs[k] = p
            total += p

        u = _next_uniform(state) * total
        acc = 0.0
        k_new = n_topics - 1
        for k in range(n_topics):
            acc += probs[k]
            if u < acc:
                k_new = k
                break

        z[i] = k_new
        n_dk[k_new] += 1

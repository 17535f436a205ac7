"""Compiled inner loops (numba). Inputs are plain arrays; callers validate."""

import numpy as np
from numba import njit


@njit(cache=True)
def superadditive_violation(v, tol):
    full = v.size - 1
    for s in range(1, full + 1):
        t = (s - 1) & s
        while t > 0:
            u = s ^ t
            if t < u:  # visit each unordered pair once
                if v[s] < v[t] + v[u] - tol:
                    return t, u
            t = (t - 1) & s
    return -1, -1


@njit(cache=True)
def convex_violation(v, num_players, tol):
    # local supermodularity: v(C+i+j) - v(C+j) >= v(C+i) - v(C)
    full = v.size - 1
    for i in range(num_players):
        bi = 1 << i
        for c in range(full + 1):
            if c & bi:
                continue
            gain_i = v[c | bi] - v[c]
            for j in range(num_players):
                bj = 1 << j
                if j == i or (c & bj):
                    continue
                if v[c | bi | bj] - v[c | bj] < gain_i - tol:
                    return i, c, c | bj
    return -1, -1, -1


@njit(cache=True)
def partition_dp(v):
    # best[s] = max over partitions of s; blocks enumerated with s's lowest member
    n = v.size
    best = np.empty(n)
    best[0] = 0.0
    for s in range(1, n):
        low = s & -s
        rest = s ^ low
        top = -np.inf
        t = rest
        while True:
            blk = t | low
            val = v[blk] + best[s ^ blk]
            if val > top:
                top = val
            if t == 0:
                break
            t = (t - 1) & rest
        best[s] = top
    return best


@njit(cache=True)
def _flat_index(profile, strides):
    idx = 0
    for j in range(profile.size):
        idx += profile[j] * strides[j]
    return idx


@njit(cache=True)
def _draw(p, r):
    acc = 0.0
    for a in range(p.size):
        acc += p[a]
        if r < acc:
            return a
    # rounding left r above the total: last action with positive mass
    for a in range(p.size - 1, -1, -1):
        if p[a] > 0.0:
            return a
    return p.size - 1


@njit(cache=True)
def regret_matching_loop(payoffs, counts, strides, uniforms, init_regret):
    """Play T rounds; payoffs is (K, P) flattened, uniforms is (T, K).

    Returns played profiles, realized utilities, final cumulative regrets
    and max positive average regret per step.
    """
    K = counts.size
    T = uniforms.shape[0]
    nmax = counts.max()
    regret = init_regret.copy()
    profiles = np.zeros((T, K), dtype=np.int64)
    utils = np.zeros((T, K))
    max_avg_regret = np.zeros(T)
    prob = np.zeros(nmax)
    prof = np.zeros(K, dtype=np.int64)
    for t in range(T):
        for k in range(K):
            n = counts[k]
            total = 0.0
            for a in range(n):
                r = regret[k, a]
                prob[a] = r if r > 0.0 else 0.0
                total += prob[a]
            if total > 0.0:
                for a in range(n):
                    prob[a] /= total
            else:
                for a in range(n):
                    prob[a] = 1.0 / n
            prof[k] = _draw(prob[:n], uniforms[t, k])
        base = _flat_index(prof, strides)
        worst = 0.0
        for k in range(K):
            got = payoffs[k, base]
            utils[t, k] = got
            for a in range(counts[k]):
                alt = base + (a - prof[k]) * strides[k]
                regret[k, a] += payoffs[k, alt] - got
                avg = regret[k, a] / (t + 1)
                if avg > worst:
                    worst = avg
            profiles[t, k] = prof[k]
        max_avg_regret[t] = worst
    return profiles, utils, regret, max_avg_regret


@njit(cache=True)
def bush_mosteller_loop(payoffs, counts, strides, uniforms, init_probs, step):
    """Reinforcement update on (K, nmax) probability rows; step is (T,)."""
    K = counts.size
    T = uniforms.shape[0]
    probs = init_probs.copy()
    profiles = np.zeros((T, K), dtype=np.int64)
    utils = np.zeros((T, K))
    min_entry = np.inf
    max_sum_err = 0.0
    prof = np.zeros(K, dtype=np.int64)
    for t in range(T):
        for k in range(K):
            prof[k] = _draw(probs[k, :counts[k]], uniforms[t, k])
        base = _flat_index(prof, strides)
        lam = step[t]
        for k in range(K):
            u = payoffs[k, base]
            utils[t, k] = u
            profiles[t, k] = prof[k]
            s = 0.0
            for a in range(counts[k]):
                ind = 1.0 if a == prof[k] else 0.0
                probs[k, a] += lam * u * (ind - probs[k, a])
                if probs[k, a] < min_entry:
                    min_entry = probs[k, a]
                s += probs[k, a]
            err = abs(s - 1.0)
            if err > max_sum_err:
                max_sum_err = err
    return profiles, utils, probs, min_entry, max_sum_err

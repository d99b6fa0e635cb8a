"""Brute-force reference computations used only by the tests."""

import numpy as np


def enumerate_bivariate(p, x1, x2, start, target, cutoff=1e-12, max_steps=100000):
    """Distribution of ``(W1, W2)`` at the first entrance to ``target``.

    Rewards must be nonnegative integers. Probability mass is pushed forward
    one jump at a time over a grid of (state, w1, w2) until less than
    ``cutoff`` remains in flight. Returns ``(weights, absorbed_mass)`` where
    ``weights[w1, w2]`` is the probability of finishing with that pair.
    """
    p = np.asarray(p, dtype=float)
    x1 = np.asarray(x1, dtype=int)
    x2 = np.asarray(x2, dtype=int)
    n = p.shape[0]
    targets = {target} if np.isscalar(target) else set(target)
    step1, step2 = max(1, int(x1.max())), max(1, int(x2.max()))
    size1, size2 = 64 * step1, 64 * step2
    live = np.zeros((n, size1, size2))
    live[start, 0, 0] = 1.0
    done = np.zeros((size1, size2))
    reach1 = reach2 = 0
    for _ in range(max_steps):
        if reach1 + step1 >= size1 or reach2 + step2 >= size2:
            size1, size2 = 2 * size1, 2 * size2
            live = _grow(live, size1, size2)
            done = _grow(done[None], size1, size2)[0]
        new = np.zeros_like(live)
        for i in range(n):
            block = live[i, : reach1 + 1, : reach2 + 1]
            if not block.any():
                continue
            for j in range(n):
                if p[i, j] == 0:
                    continue
                a, b = x1[i, j], x2[i, j]
                dest = done if j in targets else new[j]
                dest[a : a + reach1 + 1, b : b + reach2 + 1] += p[i, j] * block
        reach1 += step1
        reach2 += step2
        live = new
        if live.sum() < cutoff:
            break
    return done, done.sum()


def _grow(arr, size1, size2):
    out = np.zeros(arr.shape[:-2] + (size1, size2))
    out[..., : arr.shape[-2], : arr.shape[-1]] = arr
    return out


def mixed_from_weights(weights, q, s):
    w1 = np.arange(weights.shape[0], dtype=float)[:, None]
    w2 = np.arange(weights.shape[1], dtype=float)[None, :]
    return float(np.sum(weights * w1**q * w2**s))

"""Independent reference implementations used by the test-suite."""
import functools

import numpy as np


def brute_force_dtw(a, b):
    """Minimum cost over every monotone path from (0, 0) to (n-1, m-1)."""
    a, b = tuple(a), tuple(b)

    @functools.lru_cache(maxsize=None)
    def best(i, j):
        c = abs(a[i] - b[j])
        if i == 0 and j == 0:
            return c
        options = []
        if i > 0 and j > 0:
            options.append(best(i - 1, j - 1))
        if i > 0:
            options.append(best(i - 1, j))
        if j > 0:
            options.append(best(i, j - 1))
        return c + min(options)

    return best(len(a) - 1, len(b) - 1)


def monte_carlo_sample_fake(p_fake, tpr, fpr, f, g, trials=100_000, seed=0):
    """Empirical P(at least one chunk truly fake | f fake and g genuine verdicts).

    Chunks are independently fake with probability ``p_fake``; the classifier
    flags a fake chunk with probability ``tpr`` and a genuine one with ``fpr``.
    Verdict order is irrelevant, so trials are conditioned on the count of
    fake verdicts.  Returns (estimate, number of conditioned trials).
    """
    rng = np.random.default_rng(seed)
    n = f + g
    truth = rng.random((trials, n)) < p_fake
    flag = np.where(truth, rng.random((trials, n)) < tpr, rng.random((trials, n)) < fpr)
    keep = flag.sum(axis=1) == f
    hits = int(keep.sum())
    if hits == 0:
        return float("nan"), 0
    return float(truth[keep].any(axis=1).mean()), hits

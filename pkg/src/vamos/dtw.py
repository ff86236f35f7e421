"""Dynamic time warping with move accounting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_OVERLAP_FRACTION = 0.05


@dataclass(frozen=True)
class DtwResult:
    """Outcome of aligning series ``a`` (rows) against ``b`` (columns).

    ``expansion`` counts (1, 0) steps (advance in ``a`` only) and
    ``contraction`` counts (0, 1) steps.  The starting cell counts as a match,
    so ``match + expansion + contraction == path_length``.
    """

    distance: float
    match: int
    expansion: int
    contraction: int
    path_length: int
    overlap_points: int
    path: tuple = ()

    @property
    def normalized_distance(self):
        return self.distance / self.path_length


def overlap_epsilon(a, b, fraction=DEFAULT_OVERLAP_FRACTION):
    both = np.concatenate([np.ravel(a), np.ravel(b)])
    return fraction * float(both.max() - both.min())


def accumulated_cost(a, b):
    """Accumulated cost matrix with a padded inf border; ``D[i+1, j+1]`` ends at (i, j)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = a.size, b.size
    cost = np.abs(a[:, None] - b[None, :])
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    # sweep anti-diagonals; cells on one diagonal are independent
    for d in range(2, n + m + 1):
        i = np.arange(max(1, d - m), min(n, d - 1) + 1)
        j = d - i
        best = np.minimum(np.minimum(acc[i - 1, j - 1], acc[i - 1, j]), acc[i, j - 1])
        acc[i, j] = cost[i - 1, j - 1] + best
    return cost, acc


def dtw(a, b, overlap_eps=None, keep_path=False) -> DtwResult:
    """Classic DTW with steps (1,1), (1,0), (0,1) and local cost |a_i - b_j|.

    Ties in the traceback prefer a match, then an expansion, then a
    contraction, so move counts are reproducible.  ``overlap_eps`` defaults to
    5% of the combined value range; path cells within it count as overlap.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("dtw needs non-empty series")
    if overlap_eps is None:
        overlap_eps = overlap_epsilon(a, b)
    cost, acc = accumulated_cost(a, b)

    i, j = a.size, b.size
    moves = [0, 0, 0]
    overlap = 0
    path = []
    while True:
        path.append((i - 1, j - 1))
        if cost[i - 1, j - 1] <= overlap_eps:
            overlap += 1
        if i == 1 and j == 1:
            moves[0] += 1
            break
        diag, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
        if diag <= up and diag <= left:
            moves[0] += 1
            i, j = i - 1, j - 1
        elif up <= left:
            moves[1] += 1
            i -= 1
        else:
            moves[2] += 1
            j -= 1
    return DtwResult(
        distance=float(acc[a.size, b.size]),
        match=moves[0],
        expansion=moves[1],
        contraction=moves[2],
        path_length=len(path),
        overlap_points=overlap,
        path=tuple(reversed(path)) if keep_path else (),
    )


def penalized_cost(a, b, path, penalty=2.0):
    """Path cost with expansion/contraction cells weighted by ``penalty``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    total = 0.0
    prev = None
    for i, j in path:
        c = abs(a[i] - b[j])
        diagonal = prev is None or (i - prev[0] == 1 and j - prev[1] == 1)
        total += c if diagonal else penalty * c
        prev = (i, j)
    return total

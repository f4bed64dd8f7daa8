"""Exact minimum-cost bijective matching between equal-size point sets.

Two cost regimes are used by callers: plain Euclidean distance for the
pointwise correction pairing, and squared Euclidean distance for the
empirical transport metric. Both are solved exactly; the solver choice
depends only on instance size.
"""

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import DimensionMismatchError, SizeMismatchError

# Largest instance handled by the dynamic program that guarantees the
# lexicographically smallest optimal permutation.
SMALL_N = 12


def _exact_int(x: float) -> int:
    # Any finite float is p / 2^k with k <= 1074; rescaling by 2^1074
    # maps it to an integer, so sums of cost entries can be computed
    # without rounding and ties are decided exactly.
    p, q = float(x).as_integer_ratio()
    return p << (1074 - (q.bit_length() - 1))


def _solve_small(cost: np.ndarray) -> np.ndarray:
    # Subset dynamic program over column masks with exact integer cost
    # accumulation. dp[mask] is the minimal cost of assigning rows
    # i..n-1 to exactly the columns in mask, where i = n - popcount(mask).
    # Submasks are numerically smaller, so an ascending scan visits them
    # in a valid order. Float summation would break ties differently
    # depending on accumulation order; exact integers make the optimum
    # and its tie set well defined.
    n = cost.shape[0]
    full = (1 << n) - 1
    c = [[_exact_int(v) for v in row] for row in cost.tolist()]
    dp: list = [0] * (full + 1)
    for mask in range(1, full + 1):
        i = n - bin(mask).count("1")
        row = c[i]
        best = None
        m = mask
        while m:
            low = m & -m
            j = low.bit_length() - 1
            v = row[j] + dp[mask ^ low]
            if best is None or v < best:
                best = v
            m ^= low
        dp[mask] = best
    # Greedy reconstruction: the smallest column attaining the optimum at
    # each row gives the lexicographically smallest optimal permutation.
    perm = np.empty(n, dtype=np.intp)
    mask = full
    for i in range(n):
        row = c[i]
        for j in range(n):
            bit = 1 << j
            if mask & bit and row[j] + dp[mask ^ bit] == dp[mask]:
                perm[i] = j
                mask ^= bit
                break
    return perm


def solve_assignment(cost: np.ndarray) -> np.ndarray:
    """Return perm minimizing sum_i cost[i, perm[i]] over permutations.

    Instances up to SMALL_N rows get the lexicographically smallest
    optimal permutation. Larger instances are solved exactly by scipy's
    Jonker-Volgenant implementation, which is deterministic but breaks
    cost ties in an unspecified (though reproducible) way.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise SizeMismatchError(f"cost matrix must be square, got shape {cost.shape}")
    n = cost.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.intp)
    if n <= SMALL_N:
        return _solve_small(cost)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(n, dtype=np.intp)
    perm[rows] = cols
    return perm


def _prematch_duplicates(src: np.ndarray, dst: np.ndarray):
    # Pair up bitwise-identical points across the two sets. For a metric
    # cost any zero-cost edge extends to an optimal assignment (exchange
    # argument through the shared point), and fixing one keeps the rest
    # of the instance metric, so greedy pairing is safe. Not valid for
    # squared costs.
    by_bytes: dict[bytes, list[int]] = {}
    for j in range(dst.shape[0]):
        by_bytes.setdefault(dst[j].tobytes(), []).append(j)
    fixed_src: list[int] = []
    fixed_dst: list[int] = []
    for i in range(src.shape[0]):
        queue = by_bytes.get(src[i].tobytes())
        if queue:
            fixed_src.append(i)
            fixed_dst.append(queue.pop(0))
    return fixed_src, fixed_dst


def match_points(
    src: np.ndarray, dst: np.ndarray, squared: bool = False
) -> np.ndarray:
    """Exact minimum-cost matching of src rows onto dst rows.

    Returns perm with src[i] matched to dst[perm[i]]. Cost is Euclidean
    distance, or its square when squared is set. Large instances under
    the plain Euclidean cost are first reduced by pairing identical
    points, which is what keeps matching fast when many points coincide.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.ndim != 2 or dst.ndim != 2:
        raise DimensionMismatchError("point sets must be (n, d) arrays")
    if src.shape[1] != dst.shape[1]:
        raise DimensionMismatchError(
            f"dims differ: {src.shape[1]} vs {dst.shape[1]}"
        )
    if src.shape[0] != dst.shape[0]:
        raise SizeMismatchError(
            f"sizes differ: {src.shape[0]} vs {dst.shape[0]}"
        )
    n = src.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.intp)
    metric = "sqeuclidean" if squared else "euclidean"
    if n <= SMALL_N or squared:
        return solve_assignment(cdist(src, dst, metric=metric))
    fixed_src, fixed_dst = _prematch_duplicates(src, dst)
    perm = np.empty(n, dtype=np.intp)
    if fixed_src:
        perm[fixed_src] = fixed_dst
        free_src = np.setdiff1d(np.arange(n), fixed_src, assume_unique=False)
        free_dst = np.setdiff1d(np.arange(n), fixed_dst, assume_unique=False)
        if free_src.size:
            sub = solve_assignment(cdist(src[free_src], dst[free_dst], metric=metric))
            perm[free_src] = free_dst[sub]
    else:
        perm[:] = solve_assignment(cdist(src, dst, metric=metric))
    return perm


def matching_cost(
    src: np.ndarray, dst: np.ndarray, perm: np.ndarray, squared: bool = False
) -> float:
    """Total cost of a given matching under the stated cost."""
    diffs = np.asarray(src) - np.asarray(dst)[perm]
    sq = np.einsum("ij,ij->i", diffs, diffs)
    return float(sq.sum() if squared else np.sqrt(sq).sum())

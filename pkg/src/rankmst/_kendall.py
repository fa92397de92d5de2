"""Merge-sort inversion counting kernel for Kendall tau-b.

Pair statistics follow Knight's O(n log n) scheme: sort jointly by (x, y),
count discordant pairs as merge-sort inversions of the reordered y, and
correct the denominators for tie groups in x, y, and (x, y) jointly.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit("int64(float64[::1], float64[::1])", cache=True, nogil=True)
def _count_inversions(a, buf):
    # Bottom-up merge sort; a is sorted in place, buf is scratch of equal size.
    # Counts strict inversions (i < j with a[i] > a[j]); ties are not counted.
    n = a.size
    inv = 0
    width = 1
    while width < n:
        start = 0
        while start < n:
            mid = start + width
            if mid > n:
                mid = n
            end = start + 2 * width
            if end > n:
                end = n
            i = start
            j = mid
            k = start
            while i < mid and j < end:
                if a[i] <= a[j]:
                    buf[k] = a[i]
                    i += 1
                else:
                    buf[k] = a[j]
                    j += 1
                    inv += mid - i
                k += 1
            while i < mid:
                buf[k] = a[i]
                i += 1
                k += 1
            while j < end:
                buf[k] = a[j]
                j += 1
                k += 1
            for t in range(start, end):
                a[t] = buf[t]
            start += 2 * width
        width *= 2
    return inv


@njit("int64(float64[::1])", cache=True, nogil=True)
def _tie_pair_count(sorted_vals):
    # Sum of t*(t-1)/2 over runs of equal values in a sorted array.
    n = sorted_vals.size
    total = 0
    run = 1
    for i in range(1, n):
        if sorted_vals[i] == sorted_vals[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


@njit("int64(float64[::1], float64[::1])", cache=True, nogil=True)
def _joint_tie_pair_count(xs, ys):
    # Sum of t*(t-1)/2 over runs where (x, y) are jointly equal; inputs are
    # already sorted by (x, y).
    n = xs.size
    total = 0
    run = 1
    for i in range(1, n):
        if xs[i] == xs[i - 1] and ys[i] == ys[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


def kendall_pair_counts(x: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    """Return (nc_minus_nd, n1, n2, n0) for one column pair."""
    n = x.size
    order = np.lexsort((y, x))
    xs = np.ascontiguousarray(x[order])
    ys = np.ascontiguousarray(y[order])
    n0 = n * (n - 1) // 2
    n1 = int(_tie_pair_count(xs))
    n_joint = int(_joint_tie_pair_count(xs, ys))
    buf = np.empty(n, dtype=np.float64)
    discordant = int(_count_inversions(ys.copy(), buf))
    n2 = int(_tie_pair_count(np.sort(y)))
    nc_minus_nd = n0 - n1 - n2 + n_joint - 2 * discordant
    return nc_minus_nd, n1, n2, n0

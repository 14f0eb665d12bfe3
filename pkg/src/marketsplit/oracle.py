"""Reference solvers used as correctness oracles.

`brute_force_all` sweeps all 2^n assignments; `two_list_all` is the
classic meet-in-the-middle subset-sum enumeration over two sorted half
power sets.  Both exist solely to cross-check the production pipeline,
so they favor obviousness over speed and deliberately share as little
machinery with it as possible.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .instances import MASK64, MspInstance, SolutionVector

#: Hard cap on brute-force enumeration; guards accidental exponential blowups.
BRUTE_FORCE_LIMIT = 28

#: Cap on the two-list enumeration (2^(n/2) space).
TWO_LIST_LIMIT = 40

_LOW_BITS = 20


def brute_force_all(inst: MspInstance) -> list[SolutionVector]:
    """All solutions of A x = d, ascending by integer encoding (x_1 = MSB).

    Enumerates every assignment: the low `_LOW_BITS` variables are
    expanded into an explicit bit matrix and checked row-by-row with
    vectorized compares; the remaining high variables are swept in an
    outer Python loop.
    """
    n, m = inst.n, inst.m
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force capped at n <= {BRUTE_FORCE_LIMIT}, got n={n}")
    lo = min(n, _LOW_BITS)
    hi = n - lo

    # Encoding bit k (from the LSB) belongs to variable x_{n-k}.
    a = inst.a.tolist()
    d = inst.d.tolist()
    low_masks = np.arange(1 << lo, dtype=np.uint64)
    one = np.uint64(1)
    low_sums = [np.zeros(1 << lo, dtype=np.uint64) for _ in range(m)]
    for t in range(lo):
        bit = (low_masks >> np.uint64(t)) & one
        for i in range(m):
            low_sums[i] += bit * np.uint64(a[i][n - 1 - t])

    solutions: list[SolutionVector] = []
    for high in range(1 << hi):
        ok: np.ndarray | None = None
        for i in range(m):
            high_part = 0
            for t in range(hi):
                if (high >> t) & 1:
                    high_part += a[i][n - 1 - lo - t]
            rem = d[i] - high_part
            if rem < 0:
                ok = None
                break
            row_ok = low_sums[i] == np.uint64(rem)
            ok = row_ok if ok is None else (ok & row_ok)
            if not ok.any():
                ok = None
                break
        if ok is None:
            continue
        base = high << lo
        for low in np.flatnonzero(ok):
            enc = base | int(low)
            solutions.append(tuple((enc >> (n - 1 - j)) & 1 for j in range(n)))
    return solutions


def _power_set_sums(values: Sequence[int]) -> np.ndarray:
    """Subset sums indexed by bitmask (bit t selects values[t])."""
    sums = np.zeros(1, dtype=np.uint64)
    for v in values:
        sums = np.concatenate([sums, sums + np.uint64(v)])
    return sums


def two_list_all(weights: Sequence[int], target: int) -> list[int]:
    """All subset bitmasks of `weights` summing to `target`, ascending.

    Splits the weights into two halves, sorts both half power sets by
    sum, and walks them with two pointers (left ascending, right
    descending), expanding equal-sum runs on both sides whenever the
    combined value hits the target.
    """
    ws = [int(w) for w in weights]
    if len(ws) > TWO_LIST_LIMIT:
        raise ValueError(f"two-list capped at {TWO_LIST_LIMIT} weights, got {len(ws)}")
    if any(w < 0 for w in ws):
        raise ValueError("weights must be non-negative")
    if sum(ws) > MASK64:
        raise ValueError("total weight overflows 64-bit range")
    if target < 0:
        return []

    h = (len(ws) + 1) // 2
    left_sums = _power_set_sums(ws[:h])
    right_sums = _power_set_sums(ws[h:])
    left_order = np.argsort(left_sums, kind="stable")
    right_order = np.argsort(right_sums, kind="stable")
    ls = left_sums[left_order]
    rs = right_sums[right_order]

    found: list[np.ndarray] = []
    i, j = 0, len(rs) - 1
    t = np.uint64(target) if target <= MASK64 else None
    if t is None:
        return []
    while i < len(ls) and j >= 0:
        s = int(ls[i]) + int(rs[j])
        if s < target:
            i += 1
        elif s > target:
            j -= 1
        else:
            i2 = int(np.searchsorted(ls, ls[i], side="right"))
            j2 = int(np.searchsorted(rs, rs[j], side="left")) - 1
            lmask = left_order[i:i2].astype(np.uint64)
            rmask = (right_order[j2 + 1 : j + 1].astype(np.uint64)) << np.uint64(h)
            found.append((lmask[:, None] | rmask[None, :]).ravel())
            i, j = i2, j2
    if not found:
        return []
    masks = np.concatenate(found)
    masks.sort()
    return [int(v) for v in masks]

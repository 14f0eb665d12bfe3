"""Batch candidate validation: residuals, fold hashing, hash-join matching.

A batch pairs every left candidate (weight alpha) with every right
candidate (weight beta).  Rather than comparing the quadratic product,
each side is reduced to one m-vector per pair: the left residual is the
summed contribution vector, the right residual is the right-hand side
minus the summed contribution.  A left/right pair solves the full system
exactly when their residuals are equal, so both sides are fold-hashed to
single 64-bit values, the left hash set is sorted, and each right hash
is binary-searched.  Hash equality is never trusted: every hit is
confirmed by exact vector equality and a full re-verification of the
assembled solution, so the hash function affects speed only.

Two interchangeable backends implement the same semantics: "serial" is
a pure-Python reference (the conformance oracle), "parallel" vectorizes
residuals, hashing, sorting, and searching with numpy.  Oversized
batches are cut into chunk pairs and matched quadratically per chunk to
respect a memory budget; chunking never changes the result set because
the pair product is partitioned disjointly.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import fastval
from .enumerate1d import CandidateBatch, QuarterTable, assemble_solution, permuted_rhs
from .instances import MASK64, MspInstance, SolutionVector, verify_solution

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

DEFAULT_MEMORY_BUDGET = 512 * 2**20


def hash_two(h: int, v: int) -> int:
    """One fold step: XOR then 64-bit wrapping multiply (FNV-1a style)."""
    return ((h ^ v) * FNV_PRIME) & MASK64


def encode_vector(vec: Sequence[int]) -> int:
    """Fold a vector's coordinates, in index order, into one 64-bit hash."""
    h = FNV_OFFSET
    for coord in vec:
        h = hash_two(h, int(coord))
    return h


def encode_batch(vectors: np.ndarray) -> np.ndarray:
    """Vectorized `encode_vector` over the rows of an (N, m) uint64 array."""
    n, m = vectors.shape
    h = np.full(n, FNV_OFFSET, dtype=np.uint64)
    prime = np.uint64(FNV_PRIME)
    for j in range(m):
        h = (h ^ vectors[:, j]) * prime
    return h


@dataclass
class ValidationStats:
    """Counters accumulated across batches."""

    candidates_left: int = 0
    candidates_right: int = 0
    filtered_residuals: int = 0
    hash_hits: int = 0
    exact_hits: int = 0


@dataclass
class ResidualSet:
    """Per-pair m-vectors for one side of a batch.

    `pairs` are the surviving source index pairs, aligned with `vectors`;
    right-side pairs whose contribution exceeds the right-hand side in
    any coordinate are dropped before construction (`n_filtered`).
    """

    side: str
    vectors: np.ndarray
    pairs: np.ndarray
    n_filtered: int = 0

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass
class EncodedSet:
    """Hashes aligned with a ResidualSet; `order` carries original
    indices once sorted."""

    hashes: np.ndarray
    order: np.ndarray | None = None

    @property
    def is_sorted(self) -> bool:
        return self.order is not None


def sort_encoded(enc: EncodedSet) -> EncodedSet:
    """Stable sort by hash value, carrying original indices alongside."""
    order = np.argsort(enc.hashes, kind="stable")
    return EncodedSet(hashes=enc.hashes[order], order=order)


def _left_residuals(
    pairs: np.ndarray, tables: Sequence[QuarterTable], alpha: int
) -> ResidualSet:
    ta, tb = tables[0], tables[1]
    vectors = ta.contribs[pairs[:, 0]] + tb.contribs[pairs[:, 1]]
    if len(vectors) and not (vectors[:, 0] == np.uint64(alpha)).all():
        raise AssertionError("left residual coordinate 0 disagrees with alpha")
    return ResidualSet(side="left", vectors=vectors, pairs=pairs)


def _right_residuals(
    pairs: np.ndarray,
    tables: Sequence[QuarterTable],
    d: np.ndarray,
    alpha: int,
) -> ResidualSet:
    tc, td = tables[2], tables[3]
    raw = tc.contribs[pairs[:, 0]] + td.contribs[pairs[:, 1]]
    keep = (raw <= d).all(axis=1)
    vectors = d - raw[keep]
    kept_pairs = pairs[keep]
    if len(vectors) and not (vectors[:, 0] == np.uint64(alpha)).all():
        raise AssertionError("right residual coordinate 0 disagrees with alpha")
    return ResidualSet(
        side="right",
        vectors=vectors,
        pairs=kept_pairs,
        n_filtered=int(len(pairs) - len(kept_pairs)),
    )


def compute_residuals(
    batch: CandidateBatch, tables: Sequence[QuarterTable], d: np.ndarray
) -> tuple[ResidualSet, ResidualSet]:
    """Left and right residual sets for a batch against right-hand side d.

    d must be ordered like the tables' contribution coordinates (see
    `permuted_rhs`), with d[0] the enumeration target.
    """
    d = np.asarray(d, dtype=np.uint64)
    left = _left_residuals(batch.left_pairs, tables, batch.alpha)
    right = _right_residuals(batch.right_pairs, tables, d, batch.alpha)
    return left, right


class SerialBackend:
    """Pure-Python reference implementation; the conformance oracle."""

    name = "serial"

    def __init__(self, encode_fn: Callable[[Sequence[int]], int] | None = None):
        self._encode_one = encode_fn or encode_vector

    def encode(self, vectors: np.ndarray) -> EncodedSet:
        rows = vectors.tolist()
        hashes = np.array(
            [self._encode_one(row) for row in rows], dtype=np.uint64
        )
        return EncodedSet(hashes=hashes)

    def find_matches(
        self, left: ResidualSet, right: ResidualSet
    ) -> tuple[list[tuple[int, int]], int]:
        left_hashes = [int(h) for h in self.encode(left.vectors).hashes]
        right_hashes = [int(h) for h in self.encode(right.vectors).hashes]
        # independent of numpy sorting on purpose: this is the reference
        order = sorted(range(len(left_hashes)), key=lambda t: (left_hashes[t], t))
        sorted_left = EncodedSet(
            hashes=np.array([left_hashes[t] for t in order], dtype=np.uint64),
            order=np.array(order, dtype=np.int64),
        )
        sorted_hashes = [int(h) for h in sorted_left.hashes]
        left_rows = left.vectors.tolist()
        right_rows = right.vectors.tolist()
        matches: list[tuple[int, int]] = []
        hash_hits = 0
        for r, hr in enumerate(right_hashes):
            pos = bisect_left(sorted_hashes, hr)
            while pos < len(sorted_hashes) and sorted_hashes[pos] == hr:
                hash_hits += 1
                lq = order[pos]
                if left_rows[lq] == right_rows[r]:
                    matches.append((lq, r))
                pos += 1
        return matches, hash_hits


class ParallelBackend:
    """Data-parallel CPU implementation (numpy-vectorized).

    When the compiled kernels are importable and no encode override is
    installed, chunk validation takes a fused path that hashes residuals
    without materializing them; results are bit-identical either way.
    """

    name = "parallel"

    def __init__(
        self,
        encode_fn: Callable[[np.ndarray], np.ndarray] | None = None,
        fused: bool | None = None,
    ):
        self._encode_many = encode_fn or encode_batch
        if fused is None:
            fused = fastval.available() and encode_fn is None
        self.fused = fused and encode_fn is None

    def encode(self, vectors: np.ndarray) -> EncodedSet:
        return EncodedSet(hashes=self._encode_many(vectors))

    def find_matches(
        self, left: ResidualSet, right: ResidualSet
    ) -> tuple[list[tuple[int, int]], int]:
        sorted_left = sort_encoded(self.encode(left.vectors))
        right_hashes = self.encode(right.vectors).hashes
        order = sorted_left.order
        sorted_hashes = sorted_left.hashes
        lo = np.searchsorted(sorted_hashes, right_hashes, side="left")
        hi = np.searchsorted(sorted_hashes, right_hashes, side="right")
        matches: list[tuple[int, int]] = []
        hash_hits = 0
        for r in np.flatnonzero(hi > lo):
            r = int(r)
            for pos in range(int(lo[r]), int(hi[r])):
                hash_hits += 1
                lq = int(order[pos])
                if np.array_equal(left.vectors[lq], right.vectors[r]):
                    matches.append((lq, r))
        return matches, hash_hits


_BACKENDS = {"serial": SerialBackend, "parallel": ParallelBackend}


def get_backend(name: str):
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise ValueError(
            f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}"
        ) from None


def match_batch(
    left: ResidualSet,
    right: ResidualSet,
    inst: MspInstance,
    tables: Sequence[QuarterTable],
    backend=None,
    stats: ValidationStats | None = None,
) -> list[SolutionVector]:
    """Solutions among left x right, via sorted-hash join plus exact confirm.

    Results are ordered by (right index, sorted-left position), which both
    backends produce identically.
    """
    backend = backend or ParallelBackend()
    matches, hash_hits = backend.find_matches(left, right)
    solutions: list[SolutionVector] = []
    for lq, r in matches:
        a_idx, b_idx = left.pairs[lq]
        c_idx, d_idx = right.pairs[r]
        x = assemble_solution(tables, a_idx, b_idx, c_idx, d_idx)
        if not verify_solution(inst, x):
            raise RuntimeError(
                "internal error: residual match failed full verification"
            )
        solutions.append(x)
    if stats is not None:
        stats.hash_hits += hash_hits
        stats.exact_hits += len(solutions)
    return solutions


def _confirm_hits(
    hits: np.ndarray,
    hash_hits: int,
    left_pairs: np.ndarray,
    right_pairs: np.ndarray,
    inst: MspInstance,
    tables: Sequence[QuarterTable],
    d: np.ndarray,
    stats: ValidationStats | None,
) -> list[SolutionVector]:
    """Exact-confirm full-hash hits by recomputing both residual vectors."""
    ta, tb, tc, td = tables
    solutions: list[SolutionVector] = []
    for lq, r in hits:
        a_idx, b_idx = left_pairs[lq]
        c_idx, d_idx = right_pairs[r]
        left_vec = ta.contribs[a_idx] + tb.contribs[b_idx]
        right_vec = d - (tc.contribs[c_idx] + td.contribs[d_idx])
        if np.array_equal(left_vec, right_vec):
            x = assemble_solution(tables, a_idx, b_idx, c_idx, d_idx)
            if not verify_solution(inst, x):
                raise RuntimeError(
                    "internal error: residual match failed full verification"
                )
            solutions.append(x)
    if stats is not None:
        stats.hash_hits += hash_hits
        stats.exact_hits += len(solutions)
    return solutions


def validate_chunked(
    batch: CandidateBatch,
    tables: Sequence[QuarterTable],
    inst: MspInstance,
    chunk_pairs: int,
    backend=None,
    d: np.ndarray | None = None,
    stats: ValidationStats | None = None,
    should_stop: Callable[[], bool] | None = None,
) -> list[SolutionVector]:
    """Match a batch in (left chunk, right chunk) pieces of <= chunk_pairs.

    The union over chunk pairs equals one unchunked match; partitioning
    the pair product disjointly makes duplicates impossible.  When
    `should_stop` fires the remaining chunk pairs are abandoned (used for
    first-solution cancellation; never in exhaustive mode).
    """
    if chunk_pairs < 1:
        raise ValueError(f"chunk_pairs must be >= 1, got {chunk_pairs}")
    backend = backend or ParallelBackend()
    if d is None:
        d = permuted_rhs(inst, tables)
    d = np.ascontiguousarray(d, dtype=np.uint64)
    fused = getattr(backend, "fused", False)
    ta, tb, tc, td = tables

    n_left, n_right = batch.n_left, batch.n_right
    solutions: list[SolutionVector] = []
    first_sweep = True
    for ls in range(0, max(n_left, 1), chunk_pairs):
        left_chunk = batch.left_pairs[ls : ls + chunk_pairs]
        if not fused:
            left_rs = _left_residuals(left_chunk, tables, batch.alpha)
        if stats is not None:
            stats.candidates_left += len(left_chunk)
        for rs_start in range(0, max(n_right, 1), chunk_pairs):
            if should_stop is not None and should_stop():
                return solutions
            right_chunk = batch.right_pairs[rs_start : rs_start + chunk_pairs]
            if fused:
                hits, hash_hits, filtered = fastval.join_pairs(
                    ta.contribs, tb.contribs, left_chunk,
                    tc.contribs, td.contribs, right_chunk,
                    d, batch.alpha,
                )
                if stats is not None and first_sweep:
                    stats.candidates_right += len(right_chunk)
                    stats.filtered_residuals += filtered
                solutions.extend(
                    _confirm_hits(
                        hits, hash_hits, left_chunk, right_chunk,
                        inst, tables, d, stats,
                    )
                )
            else:
                right_rs = _right_residuals(right_chunk, tables, d, batch.alpha)
                if stats is not None and first_sweep:
                    stats.candidates_right += len(right_chunk)
                    stats.filtered_residuals += right_rs.n_filtered
                solutions.extend(
                    match_batch(left_rs, right_rs, inst, tables, backend, stats)
                )
        first_sweep = False
    return solutions


def default_chunk_pairs(m: int, budget_bytes: int = DEFAULT_MEMORY_BUDGET) -> int:
    """Largest chunk size whose residuals, hashes, and indices fit the budget."""
    per_pair = 2 * (8 * m + 32)
    return max(1, budget_bytes // per_pair)

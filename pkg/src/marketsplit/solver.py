"""End-to-end solve: reduction, enumeration, validation, termination.

The driver applies an optional surrogate reduction, builds the four
block tables for the (possibly merged) first row, and streams candidate
batches from the heap enumerator into the batch validator.  Tiny
instances skip the table machinery entirely and go straight to the
brute-force oracle.  Enumeration is inherently serial; validation can
run on worker threads behind a bounded batch buffer, which interleaves
collection and checking the way an offloaded validator would.

First-solution mode stops as soon as one verified solution exists
(cancellation is cooperative at chunk-pair granularity); all-solutions
mode always runs to heap exhaustion and its result set is independent of
pipeline depth, worker count, backend, and chunk size.  Every reported
solution is re-verified against the original, unreduced system.
"""

from __future__ import annotations

import os
import queue
import threading
import time
from dataclasses import dataclass

import numpy as np

from .enumerate1d import PairSumEnumerator, build_quarter_tables, permuted_rhs
from .instances import (
    MspInstance,
    SolutionVector,
    solution_encoding,
    surrogate_reduce,
    verify_solution,
)
from .oracle import brute_force_all
from .validate import (
    DEFAULT_MEMORY_BUDGET,
    ValidationStats,
    default_chunk_pairs,
    get_backend,
    validate_chunked,
)

# Below this many variables the table machinery costs more than sweeping
# all assignments, so the oracle solves directly (it is also the only
# route for n < 4, where a four-way block split does not exist).
BRUTE_FORCE_MAX_N = 12

_MODES = ("first", "all")
_SENTINEL = object()


class SolveTimeout(Exception):
    """Raised when a time limit expires before a verdict is reached."""


@dataclass
class SolverConfig:
    """Solve knobs.

    mode: "first" returns on the first verified solution, "all" runs to
    exhaustion.  reduce_rows r merges the first r constraint rows into
    one before solving (1 = no reduction).  chunk_pairs None sizes chunks
    from memory_budget_bytes.  worker_count 0 picks a value from the CPU
    count.
    """

    mode: str = "first"
    reduce_rows: int = 1
    chunk_pairs: int | None = None
    backend: str = "parallel"
    pipeline_depth: int = 1
    worker_count: int = 0
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET

    def validated(self) -> "SolverConfig":
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.reduce_rows < 1:
            raise ValueError("reduce_rows must be >= 1")
        if self.chunk_pairs is not None and self.chunk_pairs < 1:
            raise ValueError("chunk_pairs must be >= 1")
        if self.pipeline_depth < 1:
            raise ValueError("pipeline_depth must be >= 1")
        if self.worker_count < 0:
            raise ValueError("worker_count must be >= 0")
        if self.memory_budget_bytes < 1:
            raise ValueError("memory_budget_bytes must be >= 1")
        get_backend(self.backend)
        return self


@dataclass
class SolveStats:
    batches: int = 0
    candidates_left: int = 0
    candidates_right: int = 0
    hash_hits: int = 0
    exact_hits: int = 0
    filtered_residuals: int = 0
    peak_table_entries: int = 0
    peak_heap1: int = 0
    peak_heap2: int = 0
    t_build: float = 0.0
    t_enumerate: float = 0.0
    t_validate: float = 0.0
    t_total: float = 0.0
    fallback: str = "none"
    engine: str = "none"

    def as_dict(self) -> dict:
        return {
            "batches": self.batches,
            "candidates_left": self.candidates_left,
            "candidates_right": self.candidates_right,
            "hash_hits": self.hash_hits,
            "exact_hits": self.exact_hits,
            "filtered_residuals": self.filtered_residuals,
            "peak_table_entries": self.peak_table_entries,
            "peak_heap1": self.peak_heap1,
            "peak_heap2": self.peak_heap2,
            "t_build": round(self.t_build, 6),
            "t_enumerate": round(self.t_enumerate, 6),
            "t_validate": round(self.t_validate, 6),
            "t_total": round(self.t_total, 6),
            "fallback": self.fallback,
            "engine": self.engine,
        }


@dataclass
class SolveResult:
    verdict: str
    solutions: list[SolutionVector]
    stats: SolveStats

    @property
    def feasible(self) -> bool:
        return self.verdict == "feasible"


def _resolve_workers(count: int) -> int:
    if count > 0:
        return count
    return max(1, (os.cpu_count() or 1) - 1)


def _jit_available() -> bool:
    try:
        from . import fastenum

        return fastenum.available()
    except Exception:
        return False


def _make_enumerator(tables, target: int, engine: str | None):
    if engine in (None, "auto"):
        engine = "jit" if _jit_available() else "python"
    if engine == "jit":
        from . import fastenum

        return fastenum.JitPairSumEnumerator(tables, target)
    if engine == "python":
        return PairSumEnumerator(tables, target)
    raise ValueError(f"unknown enumerator engine {engine!r}")


def solve(
    inst: MspInstance,
    cfg: SolverConfig | None = None,
    time_limit: float | None = None,
    engine: str | None = None,
) -> SolveResult:
    """Solve an instance under the given configuration.

    Raises SolveTimeout if `time_limit` (seconds) elapses first; the
    check is cooperative, so granularity is one batch / chunk pair.
    """
    cfg = (cfg or SolverConfig()).validated()
    t_start = time.perf_counter()
    deadline = t_start + time_limit if time_limit is not None else None
    stats = SolveStats()

    work = inst
    if cfg.reduce_rows > 1:
        work = surrogate_reduce(inst, cfg.reduce_rows)

    if cfg.mode == "first" and not inst.d.any():
        zero = (0,) * inst.n
        assert verify_solution(inst, zero)
        stats.fallback = "zero-rhs"
        stats.t_total = time.perf_counter() - t_start
        return SolveResult("feasible", [zero], stats)

    if work.n <= BRUTE_FORCE_MAX_N:
        found = brute_force_all(work)
        for x in found:
            if not verify_solution(inst, x):
                raise RuntimeError(
                    "internal error: reduced-system solution fails the original"
                )
        if cfg.mode == "first":
            found = found[:1]
        stats.fallback = "brute-force"
        stats.exact_hits = len(found)
        stats.t_total = time.perf_counter() - t_start
        if deadline is not None and time.perf_counter() > deadline:
            raise SolveTimeout(f"time limit of {time_limit}s exceeded")
        return SolveResult("feasible" if found else "infeasible", found, stats)

    t0 = time.perf_counter()
    tables = build_quarter_tables(work, 0)
    stats.t_build = time.perf_counter() - t0
    stats.peak_table_entries = sum(t.size for t in tables)
    d_perm = permuted_rhs(work, tables)
    target = int(work.d[0])
    chunk = cfg.chunk_pairs or default_chunk_pairs(work.m, cfg.memory_budget_bytes)
    enumerator = _make_enumerator(tables, target, engine)
    stats.engine = enumerator.engine_name
    workers = _resolve_workers(cfg.worker_count)

    if deadline is not None and time.perf_counter() > deadline:
        raise SolveTimeout(f"time limit of {time_limit}s exceeded")

    if cfg.pipeline_depth == 1 and workers == 1:
        found = _run_sequential(
            enumerator, tables, work, inst, cfg, chunk, d_perm, stats, deadline
        )
    else:
        found = pipeline_run(
            enumerator, tables, work, inst, cfg, chunk, d_perm, stats, deadline, workers
        )

    stats.peak_heap1 = enumerator.peak_h1
    stats.peak_heap2 = enumerator.peak_h2
    if cfg.mode == "all":
        found.sort(key=solution_encoding)
        if len(set(found)) != len(found):
            raise RuntimeError("internal error: duplicate solutions emitted")
    elif found:
        found = found[:1]
    stats.t_total = time.perf_counter() - t_start
    return SolveResult("feasible" if found else "infeasible", found, stats)


def _check_verified(original: MspInstance, sols) -> None:
    for x in sols:
        if not verify_solution(original, x):
            raise RuntimeError(
                "internal error: candidate failed original-system verification"
            )


def _run_sequential(
    enumerator, tables, work, original, cfg, chunk, d_perm, stats, deadline
) -> list[SolutionVector]:
    backend = get_backend(cfg.backend)
    vstats = ValidationStats()
    found: list[SolutionVector] = []
    while True:
        if deadline is not None and time.perf_counter() > deadline:
            raise SolveTimeout("time limit exceeded")
        t0 = time.perf_counter()
        batch = enumerator.next_batch()
        stats.t_enumerate += time.perf_counter() - t0
        if batch is None:
            break
        stats.batches += 1
        t0 = time.perf_counter()
        sols = validate_chunked(
            batch, tables, work, chunk, backend, d_perm, vstats
        )
        stats.t_validate += time.perf_counter() - t0
        _check_verified(original, sols)
        found.extend(sols)
        if cfg.mode == "first" and found:
            break
    _merge_vstats(stats, vstats)
    return found


def _merge_vstats(stats: SolveStats, vstats: ValidationStats) -> None:
    stats.candidates_left += vstats.candidates_left
    stats.candidates_right += vstats.candidates_right
    stats.hash_hits += vstats.hash_hits
    stats.exact_hits += vstats.exact_hits
    stats.filtered_residuals += vstats.filtered_residuals


def pipeline_run(
    enumerator,
    tables,
    work: MspInstance,
    original: MspInstance,
    cfg: SolverConfig,
    chunk: int,
    d_perm: np.ndarray,
    stats: SolveStats,
    deadline: float | None,
    workers: int,
) -> list[SolutionVector]:
    """Producer/consumer pipeline: one enumerator, N validation workers.

    The bounded buffer gives backpressure at `pipeline_depth` batches in
    flight.  A stop event (first solution found, deadline, or worker
    error) halts the producer and is polled by workers between chunk
    pairs; a draining worker never discards a solution it already found.
    """
    buffer: queue.Queue = queue.Queue(maxsize=cfg.pipeline_depth)
    stop = threading.Event()
    lock = threading.Lock()
    results: list[tuple[int, list[SolutionVector]]] = []
    errors: list[BaseException] = []
    timed_out = threading.Event()

    def producer() -> None:
        seq = 0
        try:
            while not stop.is_set():
                if deadline is not None and time.perf_counter() > deadline:
                    timed_out.set()
                    stop.set()
                    break
                t0 = time.perf_counter()
                batch = enumerator.next_batch()
                with lock:
                    stats.t_enumerate += time.perf_counter() - t0
                if batch is None:
                    break
                with lock:
                    stats.batches += 1
                item = (seq, batch)
                seq += 1
                while not stop.is_set():
                    try:
                        buffer.put(item, timeout=0.05)
                        break
                    except queue.Full:
                        continue
        except BaseException as exc:  # propagate to the caller
            with lock:
                errors.append(exc)
            stop.set()
        finally:
            for _ in range(workers):
                while True:
                    try:
                        buffer.put(_SENTINEL, timeout=0.05)
                        break
                    except queue.Full:
                        if stop.is_set():
                            # workers are gone or leaving; drop the sentinel
                            break

    def worker() -> None:
        backend = get_backend(cfg.backend)
        vstats = ValidationStats()
        try:
            while True:
                if deadline is not None and time.perf_counter() > deadline:
                    timed_out.set()
                    stop.set()
                try:
                    item = buffer.get(timeout=0.05)
                except queue.Empty:
                    if stop.is_set():
                        break
                    continue
                if item is _SENTINEL:
                    break
                seq, batch = item
                t0 = time.perf_counter()
                sols = validate_chunked(
                    batch,
                    tables,
                    work,
                    chunk,
                    backend,
                    d_perm,
                    vstats,
                    should_stop=stop.is_set if cfg.mode == "first" else None,
                )
                with lock:
                    stats.t_validate += time.perf_counter() - t0
                if sols:
                    _check_verified(original, sols)
                    with lock:
                        results.append((seq, sols))
                    if cfg.mode == "first":
                        stop.set()
        except BaseException as exc:
            with lock:
                errors.append(exc)
            stop.set()
        finally:
            with lock:
                _merge_vstats(stats, vstats)

    threads = [threading.Thread(target=producer, name="enumerate", daemon=True)]
    threads += [
        threading.Thread(target=worker, name=f"validate-{i}", daemon=True)
        for i in range(workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    if errors:
        raise errors[0]
    if timed_out.is_set():
        raise SolveTimeout("time limit exceeded")
    results.sort(key=lambda item: item[0])
    found: list[SolutionVector] = []
    for _, sols in results:
        found.extend(sols)
    return found

"""End-to-end solve behavior: modes, fallbacks, pipeline, determinism."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marketsplit.instances import MspInstance, verify_solution
from marketsplit.oracle import brute_force_all
from marketsplit.solver import (
    BRUTE_FORCE_MAX_N,
    SolveTimeout,
    SolverConfig,
    solve,
)

from conftest import available_engines, seeded_instance, small_instances

ENGINES = available_engines()


class TestSolveBasics:
    def test_all_solutions_worked_example(self):
        inst = MspInstance([[1, 2, 3], [2, 1, 3]], [3, 3])
        result = solve(inst, SolverConfig(mode="all"))
        assert result.verdict == "feasible"
        assert result.solutions == [(0, 0, 1), (1, 1, 0)]

    def test_parity_infeasible(self):
        inst = MspInstance([[2, 2, 2, 2]], [3])
        result = solve(inst, SolverConfig(mode="first"))
        assert result.verdict == "infeasible"
        assert result.solutions == []

    def test_zero_rhs_first_mode(self):
        inst = seeded_instance(1, m=2, n=16, k=9)
        zero = MspInstance(inst.a.tolist(), [0, 0])
        result = solve(zero, SolverConfig(mode="first"))
        assert result.feasible and result.solutions == [(0,) * 16]

    def test_zero_rhs_all_mode_with_zero_columns(self):
        # a zero column creates a second solution for d = 0
        inst = MspInstance([[0, 1, 2, 3, 4]], [0])
        result = solve(inst, SolverConfig(mode="all"))
        assert result.solutions == brute_force_all(inst)
        assert len(result.solutions) == 2

    def test_brute_force_fallback_on_small_n(self):
        inst = seeded_instance(2, m=2, n=BRUTE_FORCE_MAX_N, k=9)
        result = solve(inst, SolverConfig(mode="all"))
        assert result.stats.fallback == "brute-force"
        assert result.solutions == brute_force_all(inst)

    def test_every_solution_verifies(self):
        inst = seeded_instance(3, m=2, n=14, k=6)
        result = solve(inst, SolverConfig(mode="all"))
        assert result.feasible
        for x in result.solutions:
            assert verify_solution(inst, x)

    def test_config_validation(self):
        inst = MspInstance([[1, 1, 1, 1]], [2])
        with pytest.raises(ValueError):
            solve(inst, SolverConfig(mode="some"))
        with pytest.raises(ValueError):
            solve(inst, SolverConfig(pipeline_depth=0))
        with pytest.raises(ValueError):
            solve(inst, SolverConfig(chunk_pairs=0))
        with pytest.raises(ValueError):
            solve(inst, SolverConfig(backend="gpu"))
        with pytest.raises(ValueError):
            solve(inst, SolverConfig(reduce_rows=0))

    def test_reduce_rows_out_of_range(self):
        inst = MspInstance([[1, 2, 3, 4]], [5])
        with pytest.raises(ValueError, match="r out of range"):
            solve(inst, SolverConfig(reduce_rows=2))


@pytest.mark.parametrize("engine", ENGINES)
class TestOracleEquivalence:
    def test_all_solutions_match_brute_force(self, engine):
        for seed in range(30):
            inst = seeded_instance(
                seed,
                m=1 + seed % 3,
                n=13 + seed % 8,
                k=10 if seed % 2 else 5,
                d_mode="half" if seed % 3 else "random",
            )
            expected = brute_force_all(inst)
            got = solve(inst, SolverConfig(mode="all"), engine=engine)
            assert got.solutions == expected, seed
            assert got.verdict == ("feasible" if expected else "infeasible")

    def test_first_mode_never_misses(self, engine):
        for seed in range(30):
            inst = seeded_instance(seed, m=2, n=14, k=7)
            expected = brute_force_all(inst)
            got = solve(inst, SolverConfig(mode="first"), engine=engine)
            if expected:
                assert got.feasible and got.solutions[0] in expected
            else:
                assert not got.feasible


class TestReduction:
    def test_reduction_transparency(self):
        for seed in range(15):
            inst = seeded_instance(100 + seed, m=3, n=14, k=8)
            plain = solve(inst, SolverConfig(mode="all"))
            reduced = solve(inst, SolverConfig(mode="all", reduce_rows=2))
            fully = solve(inst, SolverConfig(mode="all", reduce_rows=3))
            assert plain.solutions == reduced.solutions == fully.solutions, seed

    def test_reduced_solutions_verify_against_original(self):
        inst = seeded_instance(7, m=3, n=16, k=6)
        result = solve(inst, SolverConfig(mode="all", reduce_rows=3))
        for x in result.solutions:
            assert verify_solution(inst, x)


class TestPipeline:
    def test_depth_and_workers_do_not_change_results(self):
        for seed in (0, 5, 9):
            inst = seeded_instance(seed, m=2, n=15, k=8)
            reference = solve(
                inst, SolverConfig(mode="all", pipeline_depth=1, worker_count=1)
            )
            for depth, workers in ((2, 1), (8, 2), (4, 3)):
                got = solve(
                    inst,
                    SolverConfig(
                        mode="all", pipeline_depth=depth, worker_count=workers
                    ),
                )
                assert got.solutions == reference.solutions, (seed, depth, workers)
                assert got.stats.batches == reference.stats.batches

    def test_first_mode_pipelined(self):
        feasible = 0
        for seed in range(10):
            inst = seeded_instance(seed, m=2, n=14, k=6)
            got = solve(
                inst, SolverConfig(mode="first", pipeline_depth=4, worker_count=2)
            )
            expected = brute_force_all(inst)
            if expected:
                feasible += 1
                assert got.feasible and got.solutions[0] in expected
            else:
                assert not got.feasible
        assert feasible > 0

    def test_first_mode_stops_early(self):
        # a feasible instance whose first solution appears before exhaustion
        for seed in range(20):
            inst = seeded_instance(300 + seed, m=2, n=16, k=8)
            full = solve(inst, SolverConfig(mode="all"))
            if not full.feasible:
                continue
            first = solve(inst, SolverConfig(mode="first"))
            if first.stats.batches < full.stats.batches:
                return
        pytest.fail("no instance stopped early")


@pytest.mark.skipif(len(ENGINES) < 2, reason="compiled engine unavailable")
class TestEnginesAtScale:
    def test_full_enumeration_agreement_beyond_oracle_reach(self):
        # n = 30 and 40 exceed the brute-force cap; the two engines are
        # each other's check here
        from marketsplit.instances import generate_instance

        for m, k, seed in ((4, 100, 11), (5, 100, 1)):
            inst = generate_instance(m, k, seed)
            results = {
                engine: solve(inst, SolverConfig(mode="all"), engine=engine)
                for engine in ENGINES
            }
            sols = [r.solutions for r in results.values()]
            assert sols[0] == sols[1]
            assert len(sols[0]) >= 1
            batches = [r.stats.batches for r in results.values()]
            assert batches[0] == batches[1]


class TestBackendsThroughSolver:
    def test_serial_backend_agrees(self):
        for seed in (2, 4, 6):
            inst = seeded_instance(seed, m=2, n=14, k=7)
            parallel = solve(inst, SolverConfig(mode="all", backend="parallel"))
            serial = solve(inst, SolverConfig(mode="all", backend="serial"))
            assert parallel.solutions == serial.solutions


class TestTimeout:
    def test_timeout_raises(self):
        inst = seeded_instance(0, m=3, n=20, k=100)
        with pytest.raises(SolveTimeout):
            solve(inst, SolverConfig(mode="all"), time_limit=1e-9)

    def test_timeout_pipelined(self):
        inst = seeded_instance(0, m=3, n=20, k=100)
        with pytest.raises(SolveTimeout):
            solve(
                inst,
                SolverConfig(mode="all", pipeline_depth=4, worker_count=2),
                time_limit=1e-9,
            )

    def test_no_timeout_when_fast(self):
        inst = MspInstance([[1, 2, 3], [2, 1, 3]], [3, 3])
        result = solve(inst, SolverConfig(mode="all"), time_limit=60.0)
        assert result.feasible


class TestStats:
    def test_stats_populated_on_table_path(self):
        inst = seeded_instance(8, m=2, n=16, k=9)
        result = solve(inst, SolverConfig(mode="all"))
        s = result.stats
        assert s.batches > 0
        assert s.candidates_left > 0 and s.candidates_right > 0
        assert s.peak_table_entries == 4 * 2**4
        assert s.peak_heap1 == 2**4 and s.peak_heap2 == 2**4
        assert s.exact_hits == len(result.solutions)
        assert s.t_total > 0
        assert s.engine in ("python", "jit")

    def test_hash_hits_at_least_exact_hits(self):
        inst = seeded_instance(9, m=1, n=15, k=5)
        result = solve(inst, SolverConfig(mode="all"))
        assert result.stats.hash_hits >= result.stats.exact_hits


@given(small_instances(max_m=3, min_n=4, max_n=11, max_coeff=9))
@settings(max_examples=60, deadline=None)
def test_property_solver_equals_oracle(inst):
    expected = brute_force_all(inst)
    result = solve(inst, SolverConfig(mode="all"))
    assert result.solutions == expected

"""Shared test helpers: seeded instance construction and strategies."""

from __future__ import annotations

from hypothesis import strategies as st

from marketsplit.instances import MspInstance, SplitMix64


def seeded_instance(
    seed: int, m: int, n: int, k: int, d_mode: str = "half"
) -> MspInstance:
    """Deterministic random instance with an arbitrary (m, n) shape.

    d_mode "half" uses floor(row sum / 2) targets (the hard family's
    rule); "random" draws each target from [0, row sum].
    """
    rng = SplitMix64(seed)
    rows = [[rng.below(k) for _ in range(n)] for _ in range(m)]
    if d_mode == "half":
        d = [sum(row) // 2 for row in rows]
    elif d_mode == "random":
        d = [rng.below(sum(row) + 1) for row in rows]
    else:
        raise ValueError(d_mode)
    return MspInstance(rows, d, k_bound=k)


@st.composite
def small_instances(
    draw,
    max_m: int = 3,
    min_n: int = 4,
    max_n: int = 12,
    max_coeff: int = 12,
    plant_solution: bool = True,
):
    """Small instances; about half get a planted (feasible) solution."""
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(min_n, max_n))
    rows = [
        [draw(st.integers(0, max_coeff)) for _ in range(n)] for _ in range(m)
    ]
    if plant_solution and draw(st.booleans()):
        x = [draw(st.integers(0, 1)) for _ in range(n)]
        d = [sum(c for c, xi in zip(row, x) if xi) for row in rows]
    else:
        d = [draw(st.integers(0, sum(row) + 1)) for row in rows]
    return MspInstance(rows, d)


def available_engines() -> list[str]:
    engines = ["python"]
    try:
        from marketsplit import fastenum

        if fastenum.available():
            engines.append("jit")
    except Exception:
        pass
    return engines


def batch_vectors(tables, batch) -> set[tuple[int, ...]]:
    """Characteristic vectors of every left x right combination in a batch."""
    from marketsplit.enumerate1d import assemble_solution

    out = set()
    for a_idx, b_idx in batch.left_pairs:
        for c_idx, d_idx in batch.right_pairs:
            out.add(assemble_solution(tables, a_idx, b_idx, c_idx, d_idx))
    return out


def drain_all_batches(enumerator):
    batches = []
    while (batch := enumerator.next_batch()) is not None:
        batches.append(batch)
    return batches

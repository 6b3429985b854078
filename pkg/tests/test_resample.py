import numpy as np
import pytest

from stockboot.resample import (
    bootstrap_multisets,
    draw_multiset,
    load_multisets,
    replicate_rng,
    save_multisets,
)

SUBS = [f"d{i:02d}" for i in range(5)]


def test_multiset_has_n_entries_from_pool():
    ms = draw_multiset(SUBS, replicate_rng(7, 0))
    assert len(ms) == len(SUBS)
    assert set(ms) <= set(SUBS)
    assert ms == sorted(ms)


def test_same_seed_same_sequence():
    a = [ms for _, ms in bootstrap_multisets(SUBS, 20, seed=42)]
    b = [ms for _, ms in bootstrap_multisets(SUBS, 20, seed=42)]
    assert a == b
    c = [ms for _, ms in bootstrap_multisets(SUBS, 20, seed=43)]
    assert a != c


def test_replicates_independent_of_order():
    # regenerating replicate 13 alone matches its value inside the stream
    stream = dict(bootstrap_multisets(SUBS, 20, seed=9))
    alone = draw_multiset(SUBS, replicate_rng(9, 13))
    assert stream[13] == alone


def test_single_subdivision_degenerate():
    for r in range(10):
        assert draw_multiset(["only"], replicate_rng(1, r)) == ["only"]


def test_empty_pool_rejected():
    with pytest.raises(ValueError):
        draw_multiset([], replicate_rng(0, 0))


def test_draw_frequencies_uniform():
    # every subdivision should appear with frequency 1/n across many draws
    n_rep = 100_000
    counts = {s: 0 for s in SUBS}
    for _, ms in bootstrap_multisets(SUBS, n_rep, seed=2024):
        for s in ms:
            counts[s] += 1
    total = n_rep * len(SUBS)
    for s in SUBS:
        assert abs(counts[s] / total - 1 / len(SUBS)) < 0.01


def test_jsonl_round_trip(tmp_path):
    records = [
        {"replicate": r, "seed": 5, "entries": ms}
        for r, ms in bootstrap_multisets(SUBS, 8, seed=5)
    ]
    path = tmp_path / "multisets.jsonl"
    save_multisets(path, records)
    loaded = load_multisets(path)
    assert loaded == records


def test_multisets_vary_between_replicates():
    seen = {tuple(ms) for _, ms in bootstrap_multisets(SUBS, 50, seed=3)}
    assert len(seen) > 10

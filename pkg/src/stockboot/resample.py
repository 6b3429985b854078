"""Block bootstrap over spatial subdivisions.

A replicate draws n subdivisions out of n with replacement; the multiset of
drawn ids is the only thing that differs between replicates. Streams are
counter-based (Philox keyed by (seed, replicate index)) so that any replicate
can be regenerated in isolation, in any order, on any worker.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Independent generator for one replicate, stable across runs."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, replicate))))


def draw_multiset(subdivisions: list[str], rng: np.random.Generator) -> list[str]:
    """One bootstrap draw: n out of n with replacement, returned sorted."""
    if not subdivisions:
        raise ValueError("no subdivisions to resample")
    n = len(subdivisions)
    idx = rng.integers(0, n, size=n)
    return sorted(subdivisions[i] for i in idx)


def bootstrap_multisets(subdivisions: list[str], n_replicates: int, seed: int):
    """Yield (replicate index, multiset) pairs for a whole campaign."""
    for r in range(n_replicates):
        yield r, draw_multiset(subdivisions, replicate_rng(seed, r))


def save_multisets(path: str | Path, records: list[dict]) -> None:
    """Append-free write of multiset records, one JSON object per line."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_multisets(path: str | Path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stockboot.store import (
    SOURCES,
    SURVEY_SOURCES,
    AggregationScheme,
    CellKey,
    DataStore,
    StoreError,
    ingest_rows,
    load_store,
    save_store,
)


def make_store(seed=0, n_sub=4, years=(2000, 2002), ages=(1, 5), lengths=(10, 30)):
    """Random small store exercising every payload kind."""
    rng = np.random.default_rng(seed)
    subs = [f"d{i:02d}" for i in range(n_sub)]
    length_rows, al_rows, mat_rows, land_rows = [], [], [], []
    for sub in subs:
        for year in range(years[0], years[1] + 1):
            for month, source in [(2, "com"), (3, "smar"), (10, "soct"), (8, "com")]:
                for b in range(lengths[0], lengths[1]):
                    if rng.random() < 0.4:
                        length_rows.append((sub, year, month, source, b, float(rng.integers(1, 40))))
                if source != "com":
                    for a in range(ages[0], ages[1] + 1):
                        for b in range(lengths[0], lengths[1], 3):
                            if rng.random() < 0.3:
                                al_rows.append((sub, year, month, source, a, b, float(rng.integers(1, 12))))
                    for b in range(lengths[0], lengths[1], 2):
                        if rng.random() < 0.5:
                            mat_rows.append((sub, year, month, source, b,
                                             float(rng.integers(0, 15)), float(rng.integers(0, 15))))
            for month in range(1, 13):
                land_rows.append((sub, year, month, float(rng.uniform(0, 50))))
    return ingest_rows(length_rows, al_rows, mat_rows, land_rows,
                       year_range=years, age_range=ages, length_range=lengths)


def naive_aggregate(store, scheme, multiset):
    """Reference aggregation: walk the unit dictionaries one payload at a time."""
    ny = store.year_range[1] - store.year_range[0] + 1
    S = scheme.steps_per_year
    w = scheme.length_bin_cm
    l0, l1 = store.length_range
    nbins = (l1 - l0) // w
    a0 = store.age_range[0]
    plus_age = min(scheme.plus_group_age, store.age_range[1])
    nages = plus_age - a0 + 1

    ldist = {s: np.zeros((ny, S, nbins)) for s in SOURCES}
    aldist = {s: np.zeros((ny, S, nages, nbins)) for s in SOURCES}
    mat_imm = np.zeros((ny, nbins))
    mat_mat = np.zeros((ny, nbins))
    for sub in multiset:
        for unit in store.units_for(sub):
            yi = unit.key.year - store.year_range[0]
            step = scheme.step_of_month(unit.key.month)
            if unit.length_dist:
                for b, c in unit.length_dist.items():
                    ldist[unit.key.source][yi, step, (b - l0) // w] += c
            if unit.age_length:
                for (a, b), c in unit.age_length.items():
                    ai = min(a, plus_age) - a0
                    aldist[unit.key.source][yi, step, ai, (b - l0) // w] += c
            if unit.maturity:
                for b, (imm, mat) in unit.maturity.items():
                    mat_imm[yi, (b - l0) // w] += imm
                    mat_mat[yi, (b - l0) // w] += mat
    # landings from every subdivision exactly once, resample or not
    landings = np.zeros((ny, S))
    for sub in store.subdivisions:
        for unit in store.units_for(sub):
            if unit.landings is not None:
                yi = unit.key.year - store.year_range[0]
                landings[yi, scheme.step_of_month(unit.key.month)] += unit.landings
    # survey index per slice, midpoint rule
    slices = scheme.resolved_slices(store.length_range)
    index = {}
    for src in SURVEY_SOURCES:
        arr = np.zeros((3, ny))
        for yi in range(ny):
            for bi in range(nbins):
                mid = l0 + bi * w + 0.5 * w
                for si, (lo, hi) in enumerate(slices):
                    if lo <= mid < hi or (si == 2 and mid >= hi):
                        arr[si, yi] += ldist[src][yi, :, bi].sum()
                        break
        index[src] = arr
    return ldist, aldist, mat_imm, mat_mat, landings, index


@pytest.fixture(scope="module")
def store():
    return make_store()


SCHEMES = [AggregationScheme(s, w) for s in (12, 6, 4) for w in (1, 2)]


@pytest.mark.parametrize("scheme", SCHEMES, ids=lambda s: f"{s.steps_per_year}x{s.length_bin_cm}")
def test_aggregate_matches_naive_reference(store, scheme):
    multiset = ["d01", "d01", "d03", "d00"]
    ds = store.aggregate(scheme, multiset)
    ldist, aldist, mi, mm, landings, index = naive_aggregate(store, scheme, multiset)
    for s in SOURCES:
        np.testing.assert_allclose(ds.ldist[s], ldist[s], atol=1e-12)
        np.testing.assert_allclose(ds.aldist[s], aldist[s], atol=1e-12)
    np.testing.assert_allclose(ds.maturity_immature, mi, atol=1e-12)
    np.testing.assert_allclose(ds.maturity_mature, mm, atol=1e-12)
    np.testing.assert_allclose(ds.landings, landings, atol=1e-9)
    for s in SURVEY_SOURCES:
        np.testing.assert_allclose(ds.survey_index[s], index[s], atol=1e-12)


def test_aggregate_is_linear_in_multiplicity(store):
    scheme = AggregationScheme(4, 2)
    single = store.aggregate(scheme, ["d02"])
    double = store.aggregate(scheme, ["d02", "d02"])
    np.testing.assert_allclose(double.ldist["com"], 2 * single.ldist["com"])
    np.testing.assert_allclose(double.maturity_mature, 2 * single.maturity_mature)
    # landings exempt from multiplicity
    np.testing.assert_allclose(double.landings, single.landings)


def test_aggregate_order_invariant(store):
    scheme = AggregationScheme(6, 1)
    a = store.aggregate(scheme, ["d00", "d03", "d00", "d02"])
    b = store.aggregate(scheme, ["d03", "d00", "d02", "d00"])
    for s in SOURCES:
        np.testing.assert_array_equal(a.ldist[s], b.ldist[s])
        np.testing.assert_array_equal(a.aldist[s], b.aldist[s])


def test_full_multiset_equals_sum_of_singletons(store):
    scheme = AggregationScheme(12, 1)
    full = store.aggregate(scheme, store.subdivisions)
    acc = None
    for sub in store.subdivisions:
        part = store.aggregate(scheme, [sub]).ldist["smar"]
        acc = part if acc is None else acc + part
    np.testing.assert_allclose(full.ldist["smar"], acc, atol=1e-12)


def test_two_cm_bins_sum_adjacent_one_cm_bins(store):
    fine = store.aggregate(AggregationScheme(4, 1), ["d01", "d02"])
    coarse = store.aggregate(AggregationScheme(4, 2), ["d01", "d02"])
    folded = fine.ldist["com"].reshape(fine.ldist["com"].shape[:-1] + (-1, 2)).sum(axis=-1)
    np.testing.assert_allclose(coarse.ldist["com"], folded, atol=1e-12)


def test_plus_group_folds_older_ages(store):
    scheme = AggregationScheme(12, 1, plus_group_age=3)
    ds = store.aggregate(scheme, ["d00"])
    fine = store.aggregate(AggregationScheme(12, 1, plus_group_age=5), ["d00"])
    np.testing.assert_allclose(
        ds.aldist["smar"][..., 2, :],
        fine.aldist["smar"][..., 2:, :].sum(axis=-2),
        atol=1e-12,
    )
    assert ds.aldist["smar"].shape[-2] == 3


@given(month=st.integers(1, 12), steps=st.sampled_from([12, 6, 4]))
def test_month_to_step_mapping(month, steps):
    scheme = AggregationScheme(steps, 1)
    step = scheme.step_of_month(month)
    assert 0 <= step < steps
    assert step == (month - 1) // (12 // steps)


def test_month_to_step_examples():
    assert AggregationScheme(4, 1).step_of_month(3) == 0
    assert AggregationScheme(4, 1).step_of_month(4) == 1
    assert AggregationScheme(6, 1).step_of_month(12) == 5
    assert AggregationScheme(12, 1).step_of_month(7) == 6


def test_slice_membership_uses_bin_midpoint(store):
    # 2 cm bin [24, 26) has midpoint 25, which belongs to the middle slice
    ds = store.aggregate(AggregationScheme(4, 2), ["d00"])
    slice_of = ds.slice_of_bin()
    bi = int(np.where(ds.bin_lowers == 24)[0][0])
    assert slice_of[bi] == 1
    bi = int(np.where(ds.bin_lowers == 22)[0][0])
    assert slice_of[bi] == 0


def test_survey_index_consistent_with_slices(store):
    ds = store.aggregate(AggregationScheme(12, 1), ["d00", "d01"])
    slice_of = ds.slice_of_bin()
    for src in SURVEY_SOURCES:
        manual = np.zeros((3, ds.n_years))
        per_year = ds.ldist[src].sum(axis=1)
        for si in range(3):
            manual[si] = per_year[:, slice_of == si].sum(axis=1)
        np.testing.assert_allclose(ds.survey_index[src], manual)


def test_landings_identical_across_multisets(store):
    scheme = AggregationScheme(4, 1)
    a = store.aggregate(scheme, ["d00"])
    b = store.aggregate(scheme, ["d01", "d02", "d03"])
    np.testing.assert_array_equal(a.landings, b.landings)


def test_duplicate_rows_are_summed():
    rows = [("x", 2000, 1, "com", 10, 5.0), ("x", 2000, 1, "com", 10, 7.0)]
    store = ingest_rows(rows, year_range=(2000, 2000), age_range=(1, 3), length_range=(10, 12))
    unit = store.units[CellKey("x", 2000, 1, "com")]
    assert unit.length_dist[10] == 12.0


def test_subdivision_list_is_sorted():
    rows = [("b", 2000, 1, "com", 10, 1.0), ("a", 2000, 2, "com", 10, 1.0)]
    store = ingest_rows(rows, year_range=(2000, 2000), age_range=(1, 2), length_range=(10, 12))
    assert store.subdivisions == ["a", "b"]


@pytest.mark.parametrize("rows,err", [
    ([("x", 2000, 13, "com", 10, 1.0)], "month"),
    ([("x", 1999, 1, "com", 10, 1.0)], "year"),
    ([("x", 2000, 1, "bad", 10, 1.0)], "source"),
    ([("x", 2000, 1, "com", 99, 1.0)], "length"),
    ([("x", 2000, 1, "com", 10, -1.0)], "negative"),
])
def test_ingest_rejects_bad_rows(rows, err):
    with pytest.raises(StoreError, match=err):
        ingest_rows(rows, year_range=(2000, 2000), age_range=(1, 3), length_range=(10, 12))


def test_aggregate_rejects_unknown_subdivision(store):
    with pytest.raises(StoreError, match="unknown subdivision"):
        store.aggregate(AggregationScheme(12, 1), ["nope"])
    with pytest.raises(StoreError, match="empty"):
        store.aggregate(AggregationScheme(12, 1), [])


def test_scheme_validation():
    with pytest.raises(ValueError, match="steps_per_year"):
        AggregationScheme(5, 1)
    with pytest.raises(ValueError, match="length_bin_cm"):
        AggregationScheme(12, 3)
    store = make_store(lengths=(10, 31))
    with pytest.raises(ValueError, match="divisible"):
        store.aggregate(AggregationScheme(12, 2), ["d00"])


def test_csv_round_trip(tmp_path, store):
    rng = np.random.default_rng(3)
    length_rows = [("a", 2000, 3, "smar", 12, 4.0), ("b", 2000, 3, "smar", 13, 2.5)]
    al_rows = [("a", 2000, 3, "smar", 2, 12, 3.0)]
    mat_rows = [("a", 2000, 3, "smar", 12, 1.0, 2.0)]
    land_rows = [("a", 2000, 1, 10.0), ("b", 2000, 7, 5.0)]
    save_store({
        "length_rows": length_rows, "age_length_rows": al_rows,
        "maturity_rows": mat_rows, "landings_rows": land_rows,
        "year_range": (2000, 2000), "age_range": (1, 4), "length_range": (10, 16),
    }, tmp_path)
    loaded = load_store(tmp_path)
    direct = ingest_rows(length_rows, al_rows, mat_rows, land_rows,
                         year_range=(2000, 2000), age_range=(1, 4), length_range=(10, 16))
    scheme = AggregationScheme(12, 1)
    a = loaded.aggregate(scheme, ["a", "b"])
    b = direct.aggregate(scheme, ["a", "b"])
    np.testing.assert_allclose(a.ldist["smar"], b.ldist["smar"])
    np.testing.assert_allclose(a.landings, b.landings)
    np.testing.assert_allclose(a.maturity_mature, b.maturity_mature)


def test_load_reports_line_numbers(tmp_path):
    (tmp_path / "manifest.json").write_text(
        '{"year_range": [2000, 2000], "age_range": [1, 3], "length_range": [10, 12]}')
    (tmp_path / "lengths.csv").write_text(
        "subdivision,year,month,source,length_cm,count\n"
        "a,2000,1,com,10,5\n"
        "a,2000,1,com,eleven,5\n")
    with pytest.raises(StoreError, match="lengths.csv:3"):
        load_store(tmp_path)


def test_load_requires_manifest(tmp_path):
    with pytest.raises(StoreError, match="manifest"):
        load_store(tmp_path)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["d00", "d01", "d02", "d03"]), min_size=1, max_size=6))
def test_aggregate_totals_scale_with_multiplicity(multiset):
    store = _SHARED
    ds = store.aggregate(AggregationScheme(4, 2), multiset)
    total = sum(ds.ldist[s].sum() for s in SOURCES)
    expect = 0.0
    for sub in multiset:
        expect += sum(u.length_dist and sum(u.length_dist.values()) or 0.0
                      for u in store.units_for(sub))
    assert total == pytest.approx(expect, rel=1e-12)


_SHARED = make_store()

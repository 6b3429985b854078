import numpy as np

from stockboot.synth import SynthSpec, generate_rows, truth_params

SMALL = dict(n_subdivisions=4, n_years=6, steps_per_year=4, length_bin_cm=2)


def survey_rows(rows, source):
    return [r for r in rows["length_rows"] if r[3] == source]


def test_generation_is_deterministic():
    a, ta = generate_rows(SynthSpec(seed=9, dispersion=0.4, **SMALL))
    b, tb = generate_rows(SynthSpec(seed=9, dispersion=0.4, **SMALL))
    assert ta == tb
    assert a["length_rows"] == b["length_rows"]
    assert a["age_length_rows"] == b["age_length_rows"]
    assert a["landings_rows"] == b["landings_rows"]


def test_station_noise_perturbs_surveys_only():
    # even with cell noise active, the station factors come from their own
    # random stream and must leave the commercial draws untouched
    base, _ = generate_rows(SynthSpec(seed=9, dispersion=0.35, **SMALL))
    noisy, _ = generate_rows(SynthSpec(seed=9, dispersion=0.35,
                                       station_noise=0.3, **SMALL))
    assert survey_rows(noisy, "smar") != survey_rows(base, "smar")
    assert survey_rows(noisy, "com") == survey_rows(base, "com")
    assert noisy["landings_rows"] == base["landings_rows"]


def test_cell_noise_yields_unbiased_whole_fish():
    exact, _ = generate_rows(SynthSpec(seed=9, **SMALL))
    noisy, _ = generate_rows(SynthSpec(seed=9, dispersion=0.3, **SMALL))
    counts = np.array([r[5] for r in noisy["length_rows"]])
    assert np.all(counts == np.rint(counts)) and np.all(counts >= 1)
    for src in ("smar", "com"):
        want = sum(r[5] for r in survey_rows(exact, src))
        got = sum(r[5] for r in survey_rows(noisy, src))
        assert abs(got / want - 1.0) < 0.1


def test_station_noise_scale_tracks_effort():
    # log count ratios noisy/base: the fall survey runs at half the spring
    # effort, so its station factors must spread more
    spec = dict(seed=9, n_subdivisions=10, n_years=12, steps_per_year=4,
                length_bin_cm=2, soct_start=1)
    base, _ = generate_rows(SynthSpec(**spec))
    noisy, _ = generate_rows(SynthSpec(station_noise=0.3, **spec))

    def log_ratios(source):
        ref = {r[:5]: r[5] for r in survey_rows(base, source)}
        out = {}
        for r in survey_rows(noisy, source):
            if r[:5] in ref:
                out.setdefault((r[0], r[1]), []).append(np.log(r[5] / ref[r[:5]]))
        return {key: np.mean(v) for key, v in out.items()}

    spring, fall = log_ratios("smar"), log_ratios("soct")
    # the factor is a persistent per-subdivision catchability: constant
    # across years within a subdivision, spread across subdivisions
    for ratios in (spring, fall):
        by_sub = {}
        for (sub, _year), v in ratios.items():
            by_sub.setdefault(sub, []).append(v)
        for vals in by_sub.values():
            assert np.ptp(vals) < 1e-9
    s = np.std([v for v in spring.values()])
    f = np.std([v for v in fall.values()])
    assert s > 0.1                      # noise is actually there
    assert f > 1.25 * s


def test_end_offsets_truncate_coverage():
    spec = dict(seed=9, soct_start=1, **SMALL)
    full, _ = generate_rows(SynthSpec(**spec))
    cut, _ = generate_rows(SynthSpec(smar_end=5, soct_end=4, com_end=5, **spec))
    last = {src: max(r[1] for r in survey_rows(cut, src))
            for src in ("smar", "soct", "com")}
    first_year = 1984
    assert last["smar"] == first_year + 4
    assert last["soct"] == first_year + 3
    assert last["com"] == first_year + 4
    assert max(r[1] for r in survey_rows(full, "com")) == first_year + 5
    assert cut["landings_rows"] == full["landings_rows"]  # landings never cut


def test_truth_overrides_change_truth_and_data():
    vals = truth_params(SynthSpec(**SMALL))
    assert vals["sel_soct"] == 24.0
    spec = SynthSpec(seed=9, soct_start=1, truth_overrides={"sel_soct": 18.0}, **SMALL)
    rows, truth = generate_rows(spec)
    assert truth["sel_soct"] == 18.0
    plain, _ = generate_rows(SynthSpec(seed=9, soct_start=1, **SMALL))
    assert survey_rows(rows, "soct") != survey_rows(plain, "soct")
    assert rows["landings_rows"] == plain["landings_rows"]

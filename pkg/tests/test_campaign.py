"""Tests for the estimation protocol and campaign orchestration."""

import json

import numpy as np
import pytest

import stockboot.campaign as campaign
from stockboot.campaign import (
    CampaignError,
    FitOptions,
    WEIGHT_FLOOR,
    default_start,
    fit_once,
    load_campaign,
    reweight,
    run_campaign,
)
from stockboot.objective import COMPONENTS
from stockboot.resample import load_multisets
from stockboot.store import AggregationScheme
from stockboot.synth import SynthSpec, build_store, truth_params, write_dataset

SCHEME = AggregationScheme(steps_per_year=4, length_bin_cm=2)


def tiny_spec(**kw):
    base = dict(
        seed=11, n_subdivisions=4, n_years=6, steps_per_year=4, length_bin_cm=2,
        smar_start=1, smar_aldist_start=1, soct_start=1, maturity_start=1,
        spring_intensity=800.0, com_intensity=200.0,
    )
    base.update(kw)
    return SynthSpec(**base)


def tiny_options(**kw):
    base = dict(model="1", component_evals=40, final_evals=150, burn_evals=0,
                sa_evals=0, final_sa_evals=0, tol=1e-3, seed=0)
    base.update(kw)
    return FitOptions(**base)


@pytest.fixture(scope="module")
def tiny_data(tmp_path_factory):
    spec = tiny_spec()
    directory = tmp_path_factory.mktemp("tinydata")
    truth = write_dataset(spec, directory)
    return spec, directory, truth


# -- reweighting ---------------------------------------------------------------


class _StubLayout:
    @staticmethod
    def from_scaled(z):
        return z


class _StubObjective:
    """Separable quadratic with known per-component minima 2, 8 and 0."""

    def __init__(self):
        self.layout = _StubLayout()
        self.weights = np.ones(len(COMPONENTS))
        self.has_data = np.zeros(len(COMPONENTS), dtype=bool)
        self.has_data[:3] = True

    def component_ss(self, x):
        ss = np.zeros(len(COMPONENTS))
        ss[0] = 2.0 + (x[0] - 1.0) ** 2
        ss[1] = 8.0 + (x[1] + 2.0) ** 2
        ss[2] = x[2] ** 2
        return ss

    def __call__(self, x):
        return float(self.weights @ self.component_ss(x))


def test_reweight_inverse_minimum_rule():
    obj = _StubObjective()
    z0 = np.zeros(3)
    zlo = np.full(3, -5.0)
    zhi = np.full(3, 5.0)
    opts = FitOptions(component_evals=400, sa_evals=0, tol=1e-6)
    weights, candidates, degenerate, spent = reweight(
        obj, z0, zlo, zhi, np.random.default_rng(0), opts)

    assert weights[0] == pytest.approx(1.0 / 2.0, rel=1e-6)
    assert weights[1] == pytest.approx(1.0 / 8.0, rel=1e-6)
    # component 2 bottoms out at zero, so its weight hits the floor
    assert weights[2] == pytest.approx(1.0 / WEIGHT_FLOOR)
    assert COMPONENTS[2] in degenerate
    assert COMPONENTS[0] not in degenerate and COMPONENTS[1] not in degenerate
    assert len(candidates) == 3
    assert spent > 0


def test_reweight_skips_components_without_data():
    obj = _StubObjective()
    weights, candidates, degenerate, _ = reweight(
        obj, np.zeros(3), np.full(3, -5.0), np.full(3, 5.0),
        np.random.default_rng(0), FitOptions(component_evals=50, sa_evals=0))
    for i, name in enumerate(COMPONENTS[3:], start=3):
        assert weights[i] == 0.0
        assert name in degenerate
    # no warm-start candidate is produced for a silent component
    assert len(candidates) == 3


# -- one full estimation -------------------------------------------------------


def test_fit_once_started_at_truth_stays_there(tiny_data):
    spec, _, truth = tiny_data
    store, _ = build_store(spec)
    ds = store.aggregate(SCHEME, store.subdivisions)
    from stockboot.objective import Objective
    layout = Objective(ds).layout
    x0 = layout.pack(truth)

    opts = tiny_options(component_evals=120, final_evals=1500)
    res = fit_once(ds, opts, rng=np.random.default_rng(1), x0=x0)

    for name, value in truth.items():
        assert res.params[name] == pytest.approx(value, rel=1e-3), name
    assert res.converged
    assert res.shortfall_kt == 0.0
    # every component is at numerical dust for noise-free data at the truth
    assert res.ss.max() < 1e-9
    assert set(res.survey_fits) == {f"{s}:{i}" for s in ("smar", "soct") for i in (1, 2, 3)}
    # records built from the result must survive a JSON round trip unchanged
    record = res.to_record()
    assert json.loads(json.dumps(record)) == record
    assert set(record["component_ss"]) == set(COMPONENTS)


def test_fit_once_improves_on_generic_start(tiny_data):
    spec, _, _ = tiny_data
    store, _ = build_store(spec)
    ds = store.aggregate(SCHEME, store.subdivisions)
    from stockboot.objective import Objective
    obj = Objective(ds)
    x0 = default_start(obj.layout)

    res = fit_once(ds, tiny_options(component_evals=150, final_evals=1200),
                   rng=np.random.default_rng(3))
    obj.weights = res.weights
    assert res.fun <= obj(x0)
    assert res.n_evals > 0
    assert len(res.biomass_kt) == ds.n_years


def test_fit_options_validation():
    with pytest.raises(CampaignError, match="unknown model"):
        FitOptions(model="9").validate()
    with pytest.raises(CampaignError, match="nonnegative"):
        FitOptions(final_evals=-1).validate()


# -- campaigns -----------------------------------------------------------------


def test_campaign_is_deterministic_across_runs_and_workers(tiny_data, tmp_path):
    _, data_dir, _ = tiny_data
    opts = tiny_options()
    out1, out2 = tmp_path / "a", tmp_path / "b"
    s1 = run_campaign(data_dir, out1, SCHEME, opts, n_replicates=2, seed=7, workers=1)
    s2 = run_campaign(data_dir, out2, SCHEME, opts, n_replicates=2, seed=7, workers=2)

    assert s1["n_done"] == 2 and s1["n_failed"] == 0
    assert s2["n_done"] == 2
    assert (out1 / "point.json").read_bytes() == (out2 / "point.json").read_bytes()
    for r in range(2):
        name = f"replicate_{r:04d}.json"
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    # the saved multisets are the ones each replicate actually used
    saved = load_multisets(out1 / "multisets.jsonl")
    for rec in saved:
        used = json.loads((out1 / f"replicate_{rec['replicate']:04d}.json").read_text())
        assert used["multiset"] == rec["entries"]
        assert used["multiset"] == sorted(used["multiset"])


def test_campaign_resume_recomputes_only_whats_missing(tiny_data, tmp_path):
    _, data_dir, _ = tiny_data
    opts = tiny_options()
    out = tmp_path / "camp"
    run_campaign(data_dir, out, SCHEME, opts, n_replicates=2, seed=3)

    kept = out / "replicate_0000.json"
    removed = out / "replicate_0001.json"
    original = removed.read_bytes()
    removed.unlink()
    kept_mtime = kept.stat().st_mtime_ns
    point_mtime = (out / "point.json").stat().st_mtime_ns

    run_campaign(data_dir, out, SCHEME, opts, n_replicates=3, seed=3, resume=True)

    assert removed.read_bytes() == original
    assert kept.stat().st_mtime_ns == kept_mtime
    assert (out / "point.json").stat().st_mtime_ns == point_mtime
    assert (out / "replicate_0002.json").exists()
    meta = json.loads((out / "campaign.json").read_text())
    assert meta["n_replicates"] == 3


def test_campaign_refuses_silent_overwrite_or_changed_settings(tiny_data, tmp_path):
    _, data_dir, _ = tiny_data
    opts = tiny_options()
    out = tmp_path / "camp"
    run_campaign(data_dir, out, SCHEME, opts, n_replicates=1, seed=3)

    with pytest.raises(CampaignError, match="resume"):
        run_campaign(data_dir, out, SCHEME, opts, n_replicates=1, seed=3)
    with pytest.raises(CampaignError, match="different settings"):
        run_campaign(data_dir, out, SCHEME, opts, n_replicates=1, seed=4, resume=True)
    different = tiny_options(final_evals=151)
    with pytest.raises(CampaignError, match="different settings"):
        run_campaign(data_dir, out, SCHEME, different, n_replicates=1, seed=3, resume=True)


def test_campaign_failure_limit_and_recovery(tiny_data, tmp_path, monkeypatch):
    _, data_dir, _ = tiny_data
    opts = tiny_options()
    out = tmp_path / "camp"
    run_campaign(data_dir, out, SCHEME, opts, n_replicates=2, seed=9)
    pristine = (out / "replicate_0000.json").read_bytes()

    def always_fails(*args, **kwargs):
        raise RuntimeError("synthetic breakdown")

    (out / "replicate_0000.json").unlink()
    (out / "replicate_0001.json").unlink()
    monkeypatch.setattr(campaign, "fit_once", always_fails)
    with pytest.raises(CampaignError, match="replicates failed"):
        run_campaign(data_dir, out, SCHEME, opts, n_replicates=2, seed=9, resume=True)
    assert (out / "error_0000.json").exists()
    assert (out / "error_0001.json").exists()
    assert "synthetic breakdown" in (out / "error_0000.json").read_text()
    monkeypatch.undo()

    # one failure out of two stays under a 60% ceiling and is reported, not raised
    real_fit = campaign.fit_once
    calls = {"n": 0}

    def fails_first(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 1:
            raise RuntimeError("synthetic breakdown")
        return real_fit(*args, **kwargs)

    monkeypatch.setattr(campaign, "fit_once", fails_first)
    summary = run_campaign(data_dir, out, SCHEME, opts, n_replicates=2, seed=9,
                           resume=True, max_failure_frac=0.6)
    assert summary["n_failed"] == 1
    assert [r for r, _ in summary["failures"]] == [0]
    monkeypatch.undo()

    # a clean resume retries the failed replicate and clears its error file
    summary = run_campaign(data_dir, out, SCHEME, opts, n_replicates=2, seed=9, resume=True)
    assert summary["n_failed"] == 0
    assert not list(out.glob("error_*.json"))
    assert (out / "replicate_0000.json").read_bytes() == pristine


def test_single_subdivision_makes_every_replicate_the_point(tmp_path):
    spec = tiny_spec(n_subdivisions=1, seed=4)
    data_dir = tmp_path / "data"
    write_dataset(spec, data_dir)
    out = tmp_path / "camp"
    run_campaign(data_dir, out, SCHEME, tiny_options(), n_replicates=3, seed=1)

    point, reps = load_campaign(out)
    assert len(reps) == 3
    for rec in reps:
        assert rec["multiset"] == point["multiset"]
        assert rec["params"] == point["params"]
        assert rec["fun"] == point["fun"]


def test_load_campaign_requires_point(tmp_path):
    with pytest.raises(CampaignError, match="point"):
        load_campaign(tmp_path)

"""Smoke: fit_once + run_campaign on a tiny dataset."""
import shutil
import time
from pathlib import Path

import numpy as np

from stockboot.campaign import FitOptions, fit_once, run_campaign, load_campaign
from stockboot.store import AggregationScheme
from stockboot.synth import SynthSpec, build_store, write_dataset, truth_params

spec = SynthSpec(
    seed=11, n_subdivisions=4, n_years=6, steps_per_year=4, length_bin_cm=2,
    smar_start=1, smar_aldist_start=1, soct_start=1, maturity_start=1,
    spring_intensity=800.0, com_intensity=200.0,
)
root = Path("/tmp/smoke_campaign")
shutil.rmtree(root, ignore_errors=True)
data_dir = root / "data"
t0 = time.time()
write_dataset(spec, data_dir)
print(f"dataset written in {time.time() - t0:.1f}s")

scheme = AggregationScheme(steps_per_year=4, length_bin_cm=2)
store, _ = build_store(spec)
ds = store.aggregate(scheme, store.subdivisions)

opt = FitOptions(model="1", component_evals=150, final_evals=1200,
                 burn_evals=0, sa_evals=0, final_sa_evals=0, seed=5)
t0 = time.time()
res = fit_once(ds, opt, rng=np.random.default_rng(3))
dt = time.time() - t0
truth = truth_params(spec)
print(f"fit_once: {dt:.1f}s, {res.n_evals} evals, fun={res.fun:.3e}, "
      f"converged={res.converged}, degenerate={res.degenerate}")
for name in ("k", "beta_lu", "sel_com", "mat_l50"):
    est, tru = res.params[name], truth[name]
    print(f"  {name}: est={est:.4f} truth={tru:.4f} err={abs(est-tru)/tru:.2%}")
print("  shortfall:", res.shortfall_kt)
print("  survey_fits keys:", sorted(res.survey_fits))

out1 = root / "camp1"
t0 = time.time()
s1 = run_campaign(data_dir, out1, scheme, opt, n_replicates=3, seed=7, workers=1)
print(f"campaign serial: {time.time() - t0:.1f}s, summary={s1}")

out2 = root / "camp2"
t0 = time.time()
s2 = run_campaign(data_dir, out2, scheme, opt, n_replicates=3, seed=7, workers=2)
print(f"campaign 2 workers: {time.time() - t0:.1f}s")

for r in range(3):
    a = (out1 / f"replicate_{r:04d}.json").read_bytes()
    b = (out2 / f"replicate_{r:04d}.json").read_bytes()
    assert a == b, f"replicate {r} differs between worker counts"
assert (out1 / "point.json").read_bytes() == (out2 / "point.json").read_bytes()
print("worker-count invariance: OK")

point, reps = load_campaign(out1)
print(f"load_campaign: point fun={point['fun']:.3e}, {len(reps)} replicates")
print("multisets:", [rec["multiset"] for rec in reps])

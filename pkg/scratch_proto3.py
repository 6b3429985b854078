"""Validate the candidate acceptance dataset end to end on the new noise model."""
import shutil
import time
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from stockboot.campaign import FitOptions, fit_once, load_campaign, run_campaign
from stockboot.store import AggregationScheme, load_store
from stockboot.synth import SynthSpec, write_dataset

BIG = dict(component_evals=1500, final_evals=20000, sa_evals=400, final_sa_evals=300)
M2 = dict(component_evals=300, final_evals=5000, burn_evals=1500, sa_evals=150,
          final_sa_evals=150)
q22 = AggregationScheme(4, 2)

spec = SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2, dispersion=0.25,
                 station_noise=0.25, truth_overrides={"sel_soct": 18.0})
root = Path("/tmp/acproto3")
shutil.rmtree(root, ignore_errors=True)
data = root / "data"
data.mkdir(parents=True)
write_dataset(spec, data)
store = load_store(data)
ds = store.aggregate(q22, store.subdivisions)

t0 = time.time()
res = fit_once(ds, FitOptions(model="1", **BIG), np.random.default_rng(1))
p = res.params
print(f"point: {time.time()-t0:.0f}s k={p['k']:.3f} beta_lu={p['beta_lu']:.1f} "
      f"sel_com={p['sel_com']:.1f} sel_smar={p['sel_smar']:.1f} "
      f"sel_soct={p['sel_soct']:.1f} mat_l50={p['mat_l50']:.1f}")
bio = np.asarray(res.biomass_kt)
print(f"point biomass: {bio[0]:.0f} -> {bio[-1]:.0f} kt")

t0 = time.time()
run_campaign(data, root / "m1", q22, FitOptions(model="1", **BIG),
             n_replicates=10, seed=31)
print(f"m1 campaign: {time.time()-t0:.0f}s")
point, reps = load_campaign(root / "m1")
bio_r = np.array([r["biomass_kt"] for r in reps])
sd = bio_r.std(axis=0, ddof=1)
mean = bio_r.mean(axis=0)
print(f"m1 biomass mean: {mean[0]:.0f} -> {mean[-1]:.0f}, SD {sd.min():.0f}..{sd.max():.0f}")

names = [n for n in point["params"] if not n.startswith("init")]
close = 0
for n in names:
    vals = np.array([r["params"][n] for r in reps])
    s = vals.std(ddof=1)
    if s > 0 and abs(point["params"][n] - vals.mean()) / s < 1.0:
        close += 1
print(f"AC3 signal: {close}/{len(names)} params with |point-mean|/SD < 1.0")

# fall vs spring intercept SDs per slice
for s in (1, 2, 3):
    out = []
    for src in ("smar", "soct"):
        a = np.array([r["survey_fits"][f"{src}:{s}"][0] for r in reps
                      if f"{src}:{s}" in r["survey_fits"]])
        out.append(a.std(ddof=1) if a.size > 2 else np.nan)
    print(f"AC6 slice {s}: smar SD={out[0]:.3f} soct SD={out[1]:.3f} "
          f"{'OK' if out[1] > out[0] else 'no'}")

t0 = time.time()
run_campaign(data, root / "m2", q22, FitOptions(model="2", **M2),
             n_replicates=10, seed=32)
print(f"m2 campaign: {time.time()-t0:.0f}s")
point2, reps2 = load_campaign(root / "m2")
bio2 = np.array([r["biomass_kt"] for r in reps2]).mean(axis=0)
mid = slice(3, 17)
gap = np.max(np.abs(bio2[mid] - mean[mid]) / np.maximum(mean[mid], 1e-9))
print(f"AC5 m1 vs m2 intermediate max gap {gap:.1%}")
for src in ("smar", "soct"):
    for s in (1, 2):
        pairs = [(r["survey_fits"][f"{src}:{s}"][1], r["survey_fits"][f"{src}:{s}"][0])
                 for r in reps2 if f"{src}:{s}" in r["survey_fits"]]
        b, a = np.array(pairs).T
        rho, pv = spearmanr(b, a)
        print(f"AC5 {src}:{s} rho={rho:.2f} p={pv:.4f} beta SD={b.std(ddof=1):.2f}")

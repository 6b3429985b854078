"""Probe whether terminal data gaps produce elevated end-year biomass SDs."""
import shutil
import time
from pathlib import Path

import numpy as np

from stockboot.campaign import FitOptions, fit_once, load_campaign, run_campaign
from stockboot.store import AggregationScheme, load_store
from stockboot.synth import SynthSpec, write_dataset

LEAN = dict(component_evals=400, final_evals=6000, sa_evals=200, final_sa_evals=150)

spec = SynthSpec(seed=24, steps_per_year=12, length_bin_cm=2, dispersion=0.12,
                 harvest_rate=0.45, soct_end=19, com_end=19)
root = Path("/tmp/acgap")
shutil.rmtree(root, ignore_errors=True)
data = root / "data"
data.mkdir(parents=True)
write_dataset(spec, data)
store = load_store(data)

for steps in (12, 6, 4):
    ds = store.aggregate(AggregationScheme(steps, 2), store.subdivisions)
    t0 = time.time()
    res = fit_once(ds, FitOptions(model="1", **LEAN), np.random.default_rng(1))
    p = res.params
    bio = np.asarray(res.biomass_kt)
    print(f"steps={steps}: {time.time()-t0:.0f}s k={p['k']:.3f} "
          f"beta_lu={p['beta_lu']:.1f} bio[0]={bio[0]:.0f} bio[-1]={bio[-1]:.0f}")

t0 = time.time()
run_campaign(data, root / "camp4", AggregationScheme(4, 2),
             FitOptions(model="1", **LEAN), n_replicates=8, seed=7)
point, reps = load_campaign(root / "camp4")
bio = np.array([r["biomass_kt"] for r in reps])
sd = bio.std(axis=0, ddof=1)
med = np.median(sd[1:-2])
print(f"campaign {time.time()-t0:.0f}s sd0={sd[0]:.1f} sd-2={sd[-2]:.1f} "
      f"sd-1={sd[-1]:.1f} med={med:.1f} "
      f"-> {'PASS' if sd[0] > med and sd[-1] > med and sd[-2] > med else 'FAIL'}")
print("sd by year:", np.array2string(sd, precision=1))

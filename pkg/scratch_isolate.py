"""Isolate what destabilizes fits, measure optimizer noise, probe terminal gaps."""
import time
from pathlib import Path

import numpy as np

from stockboot.campaign import FitOptions, fit_once
from stockboot.store import AggregationScheme, load_store
from stockboot.synth import SynthSpec, build_store

BIG = dict(component_evals=1500, final_evals=20000, sa_evals=400, final_sa_evals=300)
q22 = AggregationScheme(4, 2)


def point_fit(spec_or_store, tag, seed=1, scheme=q22):
    if isinstance(spec_or_store, SynthSpec):
        store, truth = build_store(spec_or_store)
    else:
        store, truth = spec_or_store, None
    ds = store.aggregate(scheme, store.subdivisions)
    t0 = time.time()
    res = fit_once(ds, FitOptions(model="1", **BIG), np.random.default_rng(seed))
    p = res.params
    print(f"{tag}: {time.time()-t0:.0f}s k={p['k']:.3f} beta_lu={p['beta_lu']:.1f} "
          f"sel_com={p['sel_com']:.1f} sel_smar={p['sel_smar']:.1f} "
          f"sel_soct={p['sel_soct']:.1f} mat_l50={p['mat_l50']:.1f} fun={res.fun:.2f}")
    return res


# A: sel override alone; B: station alone (both at dispersion 0.25, quarterly)
point_fit(SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2, dispersion=0.25,
                    truth_overrides={"sel_soct": 18.0}), "A sel18 only")
point_fit(SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2, dispersion=0.25,
                    station_noise=0.25), "B station only")
point_fit(SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2, dispersion=0.25,
                    station_noise=0.1), "B2 station 0.1")

# optimizer noise: same v1 data, five seeds
store = load_store("/tmp/acproto/ac3data")
alphas = {f"{src}:{s}": [] for src in ("smar", "soct") for s in (1, 2, 3)}
params = {n: [] for n in ("k", "beta_lu", "sel_com", "mat_l50")}
for seed in range(1, 6):
    res = point_fit(store, f"v1 refit seed {seed}", seed=seed)
    for key in alphas:
        alphas[key].append(res.survey_fits[key][0])
    for n in params:
        params[n].append(res.params[n])
print("optimizer-only alpha SD: " +
      " ".join(f"{k}={np.std(v, ddof=1):.3f}" for k, v in alphas.items()))
print("optimizer-only param SD: " +
      " ".join(f"{n}={np.std(v, ddof=1):.3g}" for n, v in params.items()))

"""Big-budget point fits per scheme on the monthly noisy dataset.

Decides whether the 20% cross-scheme biomass gaps are an optimizer-budget
artifact or structural. Also times an AC-2 style clean-data fit.
"""
import time

import numpy as np

from stockboot.campaign import FitOptions, fit_once
from stockboot.store import AggregationScheme, load_store
from stockboot.synth import SynthSpec, build_store

store = load_store("/tmp/acproto/ac4data")
big = dict(component_evals=1500, final_evals=20000, sa_evals=400, final_sa_evals=300)

bio = {}
for steps in (12, 6, 4):
    t0 = time.time()
    ds = store.aggregate(AggregationScheme(steps, 2), store.subdivisions)
    res = fit_once(ds, FitOptions(model="1", **big), np.random.default_rng(1))
    bio[steps] = np.array(res.biomass_kt)
    print(f"steps={steps:2d}: {time.time()-t0:.0f}s evals={res.n_evals} "
          f"conv={res.converged} k={res.params['k']:.3f} "
          f"beta_lu={res.params['beta_lu']:.1f} "
          f"sel_com={res.params['sel_com']:.1f} fun={res.fun:.2f}")

mid = slice(1, -2)
for a, b in ((12, 6), (12, 4), (6, 4)):
    rel = np.abs(bio[a][mid] - bio[b][mid]) / bio[a][mid]
    print(f"{a:2d} vs {b}: intermediate max gap {rel.max():.2%} "
          f"mean gap {rel.mean():.2%}")
print("trajectories (kt):")
for s in (12, 6, 4):
    print(f"  {s:2d}: " + " ".join(f"{v:6.1f}" for v in bio[s]))

# AC-2 sizing: clean quarterly data, big budget, tight tol
spec = SynthSpec(seed=22, steps_per_year=4, length_bin_cm=2)
st, truth = build_store(spec)
ds = st.aggregate(spec.scheme(), st.subdivisions)
t0 = time.time()
res = fit_once(ds, FitOptions(model="1", component_evals=1500, final_evals=30000,
                              sa_evals=400, final_sa_evals=300, tol=1e-5),
               np.random.default_rng(2))
names = ["k", "beta_lu", "sel_com", "sel_smar", "sel_soct", "mat_l50"]
errs = {n: abs(res.params[n] - truth[n]) / truth[n] for n in names}
recs = [f"rec_{y}" for y in range(1985, 2002)]
rerrs = [abs(res.params[n] - truth[n]) / truth[n] for n in recs]
print(f"\nAC2 clean fit: {time.time()-t0:.0f}s evals={res.n_evals} conv={res.converged}")
print("  " + " ".join(f"{n}={e:.2%}" for n, e in errs.items()))
print(f"  rec intermediate: max {max(rerrs):.2%} med {np.median(rerrs):.2%}")

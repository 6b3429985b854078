"""Second prototype round with the revised acceptance datasets."""
import shutil
import time
from pathlib import Path

import numpy as np
from scipy import stats

from stockboot.campaign import FitOptions, fit_once, load_campaign, run_campaign
from stockboot.reports import bootstrap_stats, parameter_matrix
from stockboot.store import AggregationScheme, load_store
from stockboot.synth import SynthSpec, write_dataset

root = Path("/tmp/acproto2")
shutil.rmtree(root, ignore_errors=True)
root.mkdir()
t_all = time.time()

q_spec = SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2, dispersion=0.25,
                   station_noise=0.25, truth_overrides={"sel_soct": 18.0})
write_dataset(q_spec, root / "qdata")
m_spec = SynthSpec(seed=24, steps_per_year=12, length_bin_cm=2, dispersion=0.12,
                   station_noise=0.3, harvest_rate=0.45)
write_dataset(m_spec, root / "mdata")

q22 = AggregationScheme(4, 2)
BIG = dict(component_evals=1500, final_evals=20000, sa_evals=400, final_sa_evals=300)
LEAN = dict(component_evals=400, final_evals=6000, sa_evals=200, final_sa_evals=150)
M2B = dict(component_evals=300, final_evals=5000, burn_evals=1500,
           sa_evals=150, final_sa_evals=150)

# --- m1 campaign on the revised quarterly data ---
t0 = time.time()
run_campaign(root / "qdata", root / "m1", q22, FitOptions(model="1", **BIG),
             n_replicates=10, seed=31)
point, reps = load_campaign(root / "m1")
names, pv, draws = parameter_matrix(point, reps)
sb = {r["quantity"]: abs(r["std_bias"]) for r in bootstrap_stats(names, pv, draws)}
n_ok = sum(v < 1.0 for v in sb.values())
print(f"m1: {time.time()-t0:.0f}s  std_bias<1 {n_ok}/{len(sb)}  "
      f"worst {sorted(sb.items(), key=lambda kv: -kv[1])[:3]}")
print(f"m1 point: k={point['params']['k']:.3f} beta_lu={point['params']['beta_lu']:.1f} "
      f"sel_soct={point['params']['sel_soct']:.1f}")
for src in ("smar", "soct"):
    row = []
    for s in (1, 2, 3):
        a = np.array([r["survey_fits"][f"{src}:{s}"][0] for r in reps])
        row.append(f"s{s}={a.std(ddof=1):.3f}")
    print(f"AC6 {src} alpha SD: " + " ".join(row))
b1 = np.array([r["biomass_kt"] for r in reps])
print("m1 biomass SD: " + " ".join(f"{v:5.1f}" for v in b1.std(0, ddof=1)))

# --- m2 campaign, AC-5 correlations ---
t0 = time.time()
run_campaign(root / "qdata", root / "m2", q22, FitOptions(model="2", **M2B),
             n_replicates=10, seed=32)
_, reps2 = load_campaign(root / "m2")
print(f"m2: {time.time()-t0:.0f}s")
for src in ("smar", "soct"):
    for s in (1, 2):
        a = np.array([r["survey_fits"][f"{src}:{s}"][0] for r in reps2])
        b = np.array([r["survey_fits"][f"{src}:{s}"][1] for r in reps2])
        rho, p = stats.spearmanr(b, a)
        print(f"   {src}:{s} rho={rho:.3f} p={p:.4f} beta: {b.min():.2f}..{b.max():.2f}")
b2 = np.array([r["biomass_kt"] for r in reps2]).mean(axis=0)
rel = np.abs(b2 - b1.mean(0))[1:-2] / b1.mean(0)[1:-2]
print(f"AC5 biomass m1 vs m2 intermediate max gap {rel.max():.2%}")

# --- AC-4: point fits then mini campaigns on the revised monthly data ---
store = load_store(root / "mdata")
bio_pt = {}
for steps in (12, 6, 4):
    t0 = time.time()
    ds = store.aggregate(AggregationScheme(steps, 2), store.subdivisions)
    res = fit_once(ds, FitOptions(model="1", **BIG), np.random.default_rng(1))
    bio_pt[steps] = np.array(res.biomass_kt)
    print(f"AC4 point steps={steps:2d}: {time.time()-t0:.0f}s "
          f"k={res.params['k']:.3f} beta_lu={res.params['beta_lu']:.1f} fun={res.fun:.2f}")
mid = slice(1, -2)
for a, b in ((12, 6), (12, 4), (6, 4)):
    rel = np.abs(bio_pt[a][mid] - bio_pt[b][mid]) / bio_pt[a][mid]
    print(f"AC4 point {a:2d} vs {b}: max gap {rel.max():.2%} mean {rel.mean():.2%}")

bio = {}
for steps in (12, 6, 4):
    t0 = time.time()
    out = root / f"steps{steps}"
    run_campaign(root / "mdata", out, AggregationScheme(steps, 2),
                 FitOptions(model="1", **LEAN), n_replicates=6, seed=41)
    _, r_ = load_campaign(out)
    bio[steps] = np.array([rec["biomass_kt"] for rec in r_])
    print(f"AC4 campaign steps={steps}: {time.time()-t0:.0f}s "
          f"beta_lu spread {np.min([x['params']['beta_lu'] for x in r_]):.0f}.."
          f"{np.max([x['params']['beta_lu'] for x in r_]):.0f}")
for a, b in ((12, 6), (12, 4), (6, 4)):
    ma, mb = bio[a].mean(axis=0), bio[b].mean(axis=0)
    rel = np.abs(ma[mid] - mb[mid]) / ma[mid]
    print(f"AC4 mean {a:2d} vs {b}: intermediate max gap {rel.max():.2%}")
for steps in (12, 6, 4):
    sd = bio[steps].std(axis=0, ddof=1)
    med = np.median(sd[mid])
    print(f"AC4 steps={steps:2d} sd0={sd[0]:.1f} sd-2={sd[-2]:.1f} sd-1={sd[-1]:.1f} "
          f"med={med:.1f} -> {'OK' if sd[0] > med and sd[-1] > med and sd[-2] > med else 'FAIL'}")
print(f"total {time.time()-t_all:.0f}s")

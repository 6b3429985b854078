"""Prototype the AC-3/4/5/6 campaign designs end to end (lean sizes)."""
import json
import shutil
import time
from pathlib import Path

import numpy as np
from scipy import stats

from stockboot.campaign import FitOptions, load_campaign, run_campaign
from stockboot.reports import bootstrap_stats, parameter_matrix
from stockboot.store import AggregationScheme
from stockboot.synth import SynthSpec, write_dataset

root = Path("/tmp/acproto")
shutil.rmtree(root, ignore_errors=True)
root.mkdir()

t_all = time.time()
ac3_dir = root / "ac3data"
write_dataset(SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2, dispersion=0.3),
              ac3_dir)
ac4_dir = root / "ac4data"
write_dataset(SynthSpec(seed=24, steps_per_year=12, length_bin_cm=2, dispersion=0.3),
              ac4_dir)
print(f"datasets: {time.time()-t_all:.0f}s")

q22 = AggregationScheme(4, 2)
opt_m1 = FitOptions(model="1", component_evals=1500, final_evals=20000,
                    sa_evals=400, final_sa_evals=300)

# --- AC-3 style: M1 campaign, 8 reps ---
t0 = time.time()
run_campaign(ac3_dir, root / "m1", q22, opt_m1, n_replicates=8, seed=31)
point, reps = load_campaign(root / "m1")
names, pv, draws = parameter_matrix(point, reps)
rows = bootstrap_stats(names, pv, draws)
sb = {r["quantity"]: abs(r["std_bias"]) for r in rows}
n_ok = sum(1 for v in sb.values() if v < 1.0)
print(f"AC3 proto: {time.time()-t0:.0f}s, |std_bias|<1 for {n_ok}/{len(sb)}")
print("  worst:", sorted(sb.items(), key=lambda kv: -kv[1])[:5])

# --- AC-6 from the same campaign ---
alpha = {}
for src in ("smar", "soct"):
    for s in (1, 2, 3):
        alpha[(src, s)] = np.array([rec["survey_fits"][f"{src}:{s}"][0] for rec in reps])
wins = sum(alpha[("soct", s)].std(ddof=1) > alpha[("smar", s)].std(ddof=1)
           for s in (1, 2, 3))
print(f"AC6 proto: fall alpha SD > spring in {wins}/3 slices")
for s in (1, 2, 3):
    print(f"   slice{s}: spring={alpha[('smar', s)].std(ddof=1):.4f} "
          f"fall={alpha[('soct', s)].std(ddof=1):.4f}")

# --- AC-5 style: M2 campaign, 10 reps, lean ---
opt_m2 = FitOptions(model="2", component_evals=300, final_evals=5000,
                    burn_evals=1500, sa_evals=150, final_sa_evals=150)
t0 = time.time()
run_campaign(ac3_dir, root / "m2", q22, opt_m2, n_replicates=10, seed=32)
point2, reps2 = load_campaign(root / "m2")
print(f"AC5 proto campaign: {time.time()-t0:.0f}s")
for src in ("smar", "soct"):
    for s in (1, 2):
        a = np.array([rec["survey_fits"][f"{src}:{s}"][0] for rec in reps2])
        b = np.array([rec["survey_fits"][f"{src}:{s}"][1] for rec in reps2])
        rho, p = stats.spearmanr(b, a)
        print(f"   {src}:{s} rho={rho:.3f} p={p:.4f} beta_sd={b.std(ddof=1):.3f}")

bio1 = np.array([rec["biomass_kt"] for rec in reps]).mean(axis=0)
bio2 = np.array([rec["biomass_kt"] for rec in reps2]).mean(axis=0)
rel = np.abs(bio2 - bio1) / bio1
print(f"AC5 biomass M1 vs M2: intermediate max rel diff {rel[1:-2].max():.2%}")

# --- AC-4 style: 12/6/4 campaigns on same multisets, 8 reps lean ---
opt_l = FitOptions(model="1", component_evals=400, final_evals=6000,
                   sa_evals=200, final_sa_evals=150)
bio = {}
for steps in (12, 6, 4):
    t0 = time.time()
    out = root / f"steps{steps}"
    run_campaign(ac4_dir, out, AggregationScheme(steps, 2), opt_l,
                 n_replicates=8, seed=41)
    p_, r_ = load_campaign(out)
    bio[steps] = np.array([rec["biomass_kt"] for rec in r_])
    print(f"AC4 steps={steps}: {time.time()-t0:.0f}s")

m12 = (root / "steps12" / "multisets.jsonl").read_bytes()
assert m12 == (root / "steps6" / "multisets.jsonl").read_bytes()
assert m12 == (root / "steps4" / "multisets.jsonl").read_bytes()
print("AC4 multisets identical across schemes: OK")

for a, b in ((12, 6), (12, 4), (6, 4)):
    ma, mb = bio[a].mean(axis=0), bio[b].mean(axis=0)
    rel = np.abs(ma - mb) / ma
    print(f"AC4 {a} vs {b}: intermediate max rel diff {rel[1:-2].max():.2%}")
for steps in (12, 6, 4):
    sd = bio[steps].std(axis=0, ddof=1)
    med = np.median(sd[1:-2])
    print(f"AC4 steps={steps}: sd0={sd[0]:.1f} sd-2={sd[-2]:.1f} sd-1={sd[-1]:.1f} "
          f"med_mid={med:.1f} pattern={'OK' if sd[0] > med and sd[-1] > med and sd[-2] > med else 'FAIL'}")
print(f"total: {time.time()-t_all:.0f}s")

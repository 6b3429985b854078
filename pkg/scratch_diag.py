"""Diagnose the three prototype failures from the records on disk."""
import json
from pathlib import Path

import numpy as np

from stockboot.campaign import load_campaign

root = Path("/tmp/acproto")

# 1. m2 soct:1 alpha/beta pairs: how many hit the beta=1 fallback?
_, reps2 = load_campaign(root / "m2")
print("m2 soct:1 (alpha, beta) per replicate:")
for r in reps2:
    a, b = r["survey_fits"]["soct:1"]
    print(f"   alpha={a:9.3f} beta={b:7.3f} fun={r['fun']:.2f}")
ab = np.array([r["survey_fits"]["soct:1"] for r in reps2])
est = ab[ab[:, 1] != 1.0]
print(f"estimated-slope replicates: {len(est)}/{len(ab)}")
if len(est) >= 4:
    from scipy import stats
    rho, p = stats.spearmanr(est[:, 1], est[:, 0])
    print(f"rho over estimated only: {rho:.3f} p={p:.4f}")

# 2. biomass scale and per-year gaps for the step campaigns
bio = {}
for steps in (12, 6, 4):
    _, reps = load_campaign(root / f"steps{steps}")
    bio[steps] = np.array([r["biomass_kt"] for r in reps])
print("\nmean biomass by year (kt):")
print("yr   12-step   6-step   4-step   |12-6|%  |12-4|%")
m12, m6, m4 = (bio[s].mean(axis=0) for s in (12, 6, 4))
for y in range(m12.size):
    print(f"{y:3d} {m12[y]:8.1f} {m6[y]:8.1f} {m4[y]:8.1f}"
          f" {100*abs(m12[y]-m6[y])/m12[y]:8.1f} {100*abs(m12[y]-m4[y])/m12[y]:8.1f}")

print("\nper-year SD (kt):")
for s in (12, 6, 4):
    sd = bio[s].std(axis=0, ddof=1)
    print(f"steps={s:2d}: " + " ".join(f"{v:6.1f}" for v in sd))

# convergence and objective stats per scheme
for s in (12, 6, 4):
    _, reps = load_campaign(root / f"steps{s}")
    funs = [r["fun"] for r in reps]
    conv = sum(r["converged"] for r in reps)
    ne = np.mean([r["n_evals"] for r in reps])
    klist = [r["params"]["k"] for r in reps]
    blist = [r["params"]["beta_lu"] for r in reps]
    print(f"steps={s:2d}: conv {conv}/{len(reps)} evals~{ne:.0f} "
          f"k={np.mean(klist):.3f}+-{np.std(klist):.3f} "
          f"beta_lu={np.mean(blist):.0f}+-{np.std(blist):.0f}")

# 3. m1 campaign: rec/init SD profile and biomass SD profile
point1, reps1 = load_campaign(root / "m1")
b1 = np.array([r["biomass_kt"] for r in reps1])
print(f"\nm1 biomass mean: first {b1.mean(0)[0]:.0f} mid~{b1.mean(0)[8]:.0f} "
      f"last {b1.mean(0)[-1]:.0f} kt")
print("m1 biomass SD: " + " ".join(f"{v:5.1f}" for v in b1.std(0, ddof=1)))
recs = sorted(n for n in point1["params"] if n.startswith("rec_"))
rsd = [np.std([r["params"][n] for r in reps1], ddof=1) /
       np.mean([r["params"][n] for r in reps1]) for n in recs]
print("m1 rec CV by year: " + " ".join(f"{v:.2f}" for v in rsd))

"""Inspect the aldist_com pre-fit optimum on station-noise data."""
import numpy as np

from stockboot.campaign import FitOptions, default_start, reweight
from stockboot.objective import COMPONENTS, Objective
from stockboot.optim import OptimOptions, minimize
from stockboot.store import AggregationScheme
from stockboot.synth import SynthSpec, build_store

store, truth = build_store(SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2,
                                     dispersion=0.25, station_noise=0.1))
ds = store.aggregate(AggregationScheme(4, 2), store.subdivisions)
obj = Objective(ds, "1")
layout = obj.layout
zlo, zhi = layout.scaled_bounds()
z0 = layout.to_scaled(default_start(layout))
z0 = np.clip(z0, zlo, zhi)

i = COMPONENTS.index("aldist_com")
w = np.full(len(COMPONENTS), 1e-6)
w[i] = 1.0
obj.weights = w
res = minimize(lambda z: obj(layout.from_scaled(z)), z0, zlo, zhi,
               np.random.default_rng(1),
               OptimOptions(max_evals=400, sa_evals=200, tol=1e-4))
x = layout.from_scaled(res.x)
p = layout.unpack(x)
ss = obj.component_ss(x)
print(f"prefit aldist_com ss={ss[i]:.5f} shortfall={obj.shortfall(x):.2f}kt "
      f"call={obj(x):.4f}")
print(f"  k={p['k']:.3f} beta_lu={p['beta_lu']:.1f} sel_com={p['sel_com']:.1f} "
      f"recs=({min(v for n, v in p.items() if n.startswith('rec')):.3g}, "
      f"{max(v for n, v in p.items() if n.startswith('rec')):.3g})")
print("  all ss:", " ".join(f"{n}={v:.3f}" for n, v in zip(COMPONENTS, ss)))

# how big is the predicted catch at that point, vs truth?
sim = obj._simulate(x)
xt = obj.layout.pack(truth)
sim_t = obj._simulate(xt)
print(f"  pred catch total={sim.catch.sum():.3g} truth catch total={sim_t.catch.sum():.3g}")
print(f"  pred al group (y=10,s=1) nonzero cells={np.count_nonzero(sim.catch[10, 1]):d} "
      f"truth={np.count_nonzero(sim_t.catch[10, 1]):d}")
print(f"  aldist_com ss at truth={obj.component_ss(xt)[i]:.4f}")

# observed group sparsity
al = ds.aldist["com"].reshape(20, 4, -1)
g = al[10, 1]
print(f"  obs group (10,1): cells={g.size} nonzero={np.count_nonzero(g):d} "
      f"total={g.sum():.1f}")

"""Empirical sizing for the acceptance suite."""
import time

import numpy as np

from stockboot.objective import Objective
from stockboot.store import AggregationScheme
from stockboot.synth import SynthSpec, build_store

# 1. AC-1 residual levels at the two extreme schemes
for steps, width in ((12, 1), (4, 2)):
    t0 = time.time()
    spec = SynthSpec(seed=1, steps_per_year=steps, length_bin_cm=width)
    store, truth = build_store(spec)
    scheme = AggregationScheme(steps_per_year=steps, length_bin_cm=width)
    ds = store.aggregate(scheme, store.subdivisions)
    obj = Objective(ds)
    x = obj.layout.pack(truth)
    resid = obj.max_residuals(x)
    ss = obj.component_ss(x)
    print(f"scheme ({steps},{width}): gen+agg {time.time()-t0:.1f}s, "
          f"max_resid {resid.max():.2e}, max ss {ss.max():.2e}")

# 2. noisy monthly data, fit at 4-step/2cm
t0 = time.time()
noisy = SynthSpec(seed=5, steps_per_year=12, length_bin_cm=1, dispersion=0.3)
store, truth = build_store(noisy)
print(f"noisy monthly build: {time.time()-t0:.1f}s")

scheme = AggregationScheme(steps_per_year=4, length_bin_cm=2)
ds = store.aggregate(scheme, store.subdivisions)
obj = Objective(ds)
x = obj.layout.pack(truth)
t0 = time.time()
n = 200
for _ in range(n):
    obj(x)
per = (time.time() - t0) / n
print(f"per-eval at (4,2) on 20y: {per*1e3:.2f} ms")
print(f"ss at truth (noisy, model mismatch): {obj.component_ss(x)}")

# per-eval at 12 steps 2cm and 6 steps 2cm for AC-4 sizing
for steps in (6, 12):
    sch = AggregationScheme(steps_per_year=steps, length_bin_cm=2)
    d2 = store.aggregate(sch, store.subdivisions)
    o2 = Objective(d2)
    x2 = o2.layout.pack(truth)
    t0 = time.time()
    for _ in range(60):
        o2(x2)
    print(f"per-eval at ({steps},2): {(time.time()-t0)/60*1e3:.2f} ms")

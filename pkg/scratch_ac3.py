"""Separate model-mismatch from noise effects on fit quality."""
import time

import numpy as np

from stockboot.campaign import FitOptions, fit_once
from stockboot.objective import Objective
from stockboot.store import AggregationScheme
from stockboot.synth import SynthSpec, build_store

HEAD = ("k", "beta_lu", "sel_com", "sel_smar", "sel_soct", "mat_l50", "mat_alpha")


def show(tag, spec, scheme, opt, seed=0):
    store, truth = build_store(spec)
    ds = store.aggregate(scheme, store.subdivisions)
    t0 = time.time()
    res = fit_once(ds, opt, rng=np.random.default_rng(seed))
    layout = Objective(ds).layout
    errs = {n: abs(res.params[n] - truth[n]) / truth[n] for n in HEAD}
    rec_errs = [abs(res.params[n] - truth[n]) / truth[n]
                for n in layout.names if n.startswith("rec_")]
    print(f"{tag}: {time.time()-t0:.0f}s evals={res.n_evals} fun={res.fun:.3f} "
          f"conv={res.converged}")
    print("   " + " ".join(f"{n}={res.params[n]:.3g}({errs[n]:.1%})" for n in HEAD))
    print(f"   rec errs: med={np.median(rec_errs):.1%} max={max(rec_errs):.1%}")


q22 = AggregationScheme(4, 2)
opt_mid = FitOptions(model="1", component_evals=600, final_evals=8000,
                     sa_evals=200, final_sa_evals=150)
opt_big = FitOptions(model="1", component_evals=1500, final_evals=20000,
                     sa_evals=400, final_sa_evals=300)

# (i) mismatch only: monthly noise-free data, quarterly model
show("monthly->Q, clean, mid", SynthSpec(seed=5), q22, opt_mid)

# (ii) noise only: quarterly data, quarterly model, dispersion 0.3
show("Q->Q, d=0.3, mid", SynthSpec(seed=5, steps_per_year=4, length_bin_cm=2,
                                   dispersion=0.3), q22, opt_mid)

# (iii) noise only, bigger budget
show("Q->Q, d=0.3, big", SynthSpec(seed=5, steps_per_year=4, length_bin_cm=2,
                                   dispersion=0.3), q22, opt_big)

"""Per-component SS at truth vs fitted corner, with and without station noise."""
import numpy as np

from stockboot.campaign import FitOptions, fit_once
from stockboot.objective import COMPONENTS, Objective
from stockboot.store import AggregationScheme
from stockboot.synth import SynthSpec, build_store

q22 = AggregationScheme(4, 2)


def diag(spec, tag):
    store, truth = build_store(spec)
    ds = store.aggregate(q22, store.subdivisions)
    obj = Objective(ds, "1")
    xt = obj.layout.pack(truth)
    ss_t = obj.component_ss(xt)
    print(f"{tag} ss at truth:")
    for name, v in zip(COMPONENTS, ss_t):
        print(f"  {name:12s} {v:10.4f}")
    res = fit_once(ds, FitOptions(model="1", component_evals=400, final_evals=6000,
                                  sa_evals=200, final_sa_evals=150),
                   np.random.default_rng(1))
    ss_f = obj.component_ss(res.x)
    print(f"{tag} fitted fun={res.fun:.2f} k={res.params['k']:.3f} "
          f"beta_lu={res.params['beta_lu']:.1f} sel_com={res.params['sel_com']:.1f}")
    print(f"{tag} weights and fitted ss:")
    for name, w, v in zip(COMPONENTS, res.weights, ss_f):
        print(f"  {name:12s} w={w:12.4g} ss={v:10.4f} w*ss={w * v:10.2f}")


diag(SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2, dispersion=0.25), "plain")
diag(SynthSpec(seed=23, steps_per_year=4, length_bin_cm=2, dispersion=0.25,
               station_noise=0.1), "station 0.1")

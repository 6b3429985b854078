"""Estimation protocol and bootstrap campaign orchestration.

One estimation ("fit") is itself a small pipeline: optionally an
equal-weights burn-in, then one short optimization per likelihood component
to learn how small each component can get on its own, then the final
optimization under inverse-minimum weights from the best intermediate point.
A campaign repeats that whole pipeline on the full data (the point estimate)
and on every bootstrap multiset of subdivisions, writing one JSON record per
replicate so runs can be resumed and post-processed file by file.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .objective import COMPONENTS, MODELS, Objective
from .optim import OptimOptions, minimize
from .popdyn import ParamLayout
from .resample import draw_multiset, replicate_rng, save_multisets
from .store import AggregationScheme, DataStore, load_store

WEIGHT_FLOOR = 1e-12
OFF_WEIGHT = 1e-6


class CampaignError(RuntimeError):
    """Raised when a campaign cannot proceed or too many replicates fail."""


@dataclass
class FitOptions:
    """Budgets and switches for one complete estimation."""

    model: str = "1"
    component_evals: int = 2_000     # per-component reconnaissance budget
    final_evals: int = 15_000
    burn_evals: int = 8_000          # equal-weights burn-in (variants that ask for it)
    sa_evals: int = 1_000            # annealing share inside each cold optimization
    final_sa_evals: int = 500
    tol: float = 1e-4
    seed: int = 0

    def validate(self):
        if self.model not in MODELS:
            raise CampaignError(f"unknown model {self.model!r}")
        for name in ("component_evals", "final_evals", "burn_evals"):
            if getattr(self, name) < 0:
                raise CampaignError(f"{name} must be nonnegative")


@dataclass
class FitResult:
    params: dict[str, float]
    fun: float
    ss: np.ndarray
    weights: np.ndarray
    degenerate: list[str]
    converged: bool
    n_evals: int
    biomass_kt: list[float]
    survey_fits: dict[str, tuple[float, float]]
    shortfall_kt: float
    x: np.ndarray = field(repr=False, default=None)
    trace: list = field(repr=False, default_factory=list)  # (eval, f) improvements

    def to_record(self) -> dict:
        return {
            "params": {k: float(v) for k, v in self.params.items()},
            "fun": float(self.fun),
            "component_ss": {c: float(v) for c, v in zip(COMPONENTS, self.ss)},
            "weights": {c: float(v) for c, v in zip(COMPONENTS, self.weights)},
            "degenerate": list(self.degenerate),
            "converged": bool(self.converged),
            "n_evals": int(self.n_evals),
            "biomass_kt": [float(b) for b in self.biomass_kt],
            "survey_fits": {k: [float(a), float(b)] for k, (a, b) in self.survey_fits.items()},
            "shortfall_kt": float(self.shortfall_kt),
        }


def default_start(layout: ParamLayout) -> np.ndarray:
    """Generic starting vector: mid-range curve parameters, flat cohorts."""
    vals = {name: 20.0 for name in layout.names}
    vals.update(k=0.2, beta_lu=100.0, sel_com=45.0, sel_smar=30.0, sel_soct=30.0,
                mat_l50=55.0, mat_alpha=0.3)
    return layout.pack(vals)


def reweight(obj: Objective, z0: np.ndarray, zlo: np.ndarray, zhi: np.ndarray,
             rng: np.random.Generator, options: FitOptions):
    """Learn component weights: one short minimization per component.

    Each component in turn gets weight one while the others are nearly
    silenced; its smallest achievable sum of squares sets its final weight
    1/max(SS*, floor). Components with no observations are skipped entirely
    (weight zero); floored components are flagged degenerate. Returns the
    weights, the per-component optima as warm-start candidates, the flags and
    the evaluations spent.
    """
    layout = obj.layout
    n_comp = len(COMPONENTS)
    weights = np.zeros(n_comp)
    degenerate: list[str] = []
    candidates: list[np.ndarray] = []
    spent = 0
    opts = OptimOptions(max_evals=options.component_evals, sa_evals=options.sa_evals,
                        tol=options.tol)
    for i, name in enumerate(COMPONENTS):
        if not obj.has_data[i]:
            degenerate.append(name)
            continue
        w = np.full(n_comp, OFF_WEIGHT)
        w[i] = 1.0
        obj.weights = w
        res = minimize(lambda z: obj(layout.from_scaled(z)), z0, zlo, zhi, rng, opts)
        spent += res.n_evals
        ss_star = float(obj.component_ss(layout.from_scaled(res.x))[i])
        if ss_star <= WEIGHT_FLOOR:
            degenerate.append(name)
        weights[i] = 1.0 / max(ss_star, WEIGHT_FLOOR)
        candidates.append(res.x)
    return weights, candidates, degenerate, spent


def fit_once(ds, options: FitOptions | None = None,
             rng: np.random.Generator | None = None,
             x0: np.ndarray | None = None) -> FitResult:
    """Run the full estimation protocol on one aggregated dataset."""
    options = options or FitOptions()
    options.validate()
    if rng is None:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((options.seed, 101))))
    variant = MODELS[options.model]
    obj = Objective(ds, variant=variant)
    layout = obj.layout
    zlo, zhi = layout.scaled_bounds()
    z0 = layout.to_scaled(default_start(layout) if x0 is None else np.asarray(x0, dtype=float))
    z0 = np.clip(z0, zlo, zhi)
    func = lambda z: obj(layout.from_scaled(z))
    spent = 0

    if variant.burn_in and options.burn_evals > 0:
        obj.weights = np.ones(len(COMPONENTS))
        res = minimize(func, z0, zlo, zhi, rng,
                       OptimOptions(max_evals=options.burn_evals,
                                    sa_evals=options.sa_evals, tol=options.tol))
        z0 = res.x
        spent += res.n_evals

    weights, candidates, degenerate, used = reweight(obj, z0, zlo, zhi, rng, options)
    spent += used

    obj.weights = weights
    starts = [z0] + candidates
    start_vals = [func(z) for z in starts]
    z_best = starts[int(np.argmin(start_vals))]
    final = minimize(func, z_best, zlo, zhi, rng,
                     OptimOptions(max_evals=options.final_evals,
                                  sa_evals=options.final_sa_evals, tol=options.tol))
    spent += final.n_evals + len(starts)

    x_hat = layout.from_scaled(final.x)
    ss = obj.component_ss(x_hat)
    fits = obj.survey_fits(x_hat)
    return FitResult(
        params=layout.unpack(x_hat),
        fun=float(weights @ ss),
        ss=ss,
        weights=weights,
        degenerate=degenerate,
        converged=final.converged,
        n_evals=spent,
        biomass_kt=list(obj.biomass(x_hat)),
        survey_fits={f"{src}:{s + 1}": ab for (src, s), ab in fits.items()},
        shortfall_kt=obj.shortfall(x_hat),
        x=x_hat,
        trace=final.trace,
    )


# -- campaign orchestration ----------------------------------------------------

_STORE_CACHE: dict[str, DataStore] = {}


def _cached_store(data_dir: str) -> DataStore:
    store = _STORE_CACHE.get(data_dir)
    if store is None:
        store = _STORE_CACHE[data_dir] = load_store(data_dir)
    return store


def _fit_rng(seed: int, replicate: int, stage: int = 1) -> np.random.Generator:
    # stage 1 streams drive replicate fits, stage 2 the point fit;
    # stage 0 is the multiset draw in resample
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, replicate, stage))))


def _scheme_from_tuple(t) -> AggregationScheme:
    return AggregationScheme(steps_per_year=t[0], length_bin_cm=t[1], plus_group_age=t[2])


def _write_json(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    os.replace(tmp, path)


def _replicate_task(args) -> tuple[int, str | None]:
    data_dir, scheme_t, opt_dict, seed, r, out_dir = args
    out = Path(out_dir) / f"replicate_{r:04d}.json"
    try:
        store = _cached_store(data_dir)
        scheme = _scheme_from_tuple(scheme_t)
        multiset = draw_multiset(store.subdivisions, replicate_rng(seed, r))
        ds = store.aggregate(scheme, multiset)
        result = fit_once(ds, FitOptions(**opt_dict), rng=_fit_rng(seed, r))
        record = {"replicate": r, "seed": seed, "multiset": multiset}
        record.update(result.to_record())
        _write_json(out, record)
        return r, None
    except Exception as exc:  # noqa: BLE001 - per-replicate isolation is the point
        _write_json(Path(out_dir) / f"error_{r:04d}.json",
                    {"replicate": r, "seed": seed, "error": f"{type(exc).__name__}: {exc}"})
        return r, str(exc)


def run_campaign(data_dir: str | Path, out_dir: str | Path,
                 scheme: AggregationScheme, options: FitOptions,
                 n_replicates: int, seed: int, workers: int = 1,
                 resume: bool = False, max_failure_frac: float = 0.2) -> dict:
    """Point estimate plus bootstrap replicates, one JSON file each.

    Every replicate is a pure function of (dataset directory, scheme,
    options, seed, index), so reruns are byte-identical, worker count does
    not matter, and ``resume`` can skip whatever already finished. The
    campaign fails if more than ``max_failure_frac`` of replicates error out;
    earlier failures are retried on resume.
    """
    data_dir, out_dir = str(data_dir), Path(out_dir)
    options.validate()
    out_dir.mkdir(parents=True, exist_ok=True)
    store = _cached_store(data_dir)
    scheme.validate_against(store)

    meta = {
        "seed": seed, "n_replicates": n_replicates, "options": asdict(options),
        "scheme": [scheme.steps_per_year, scheme.length_bin_cm, scheme.plus_group_age],
        "subdivisions": store.subdivisions,
        "first_year": store.year_range[0],
    }
    meta_path = out_dir / "campaign.json"
    if meta_path.exists():
        old = json.loads(meta_path.read_text())
        frozen = {k: v for k, v in old.items() if k != "n_replicates"}
        if not resume:
            raise CampaignError(f"{out_dir} already holds a campaign (use resume)")
        if frozen != {k: v for k, v in meta.items() if k != "n_replicates"}:
            raise CampaignError("resume with different settings than the existing campaign")
        meta["n_replicates"] = max(n_replicates, old["n_replicates"])
    _write_json(meta_path, meta)

    records = [{"replicate": r, "seed": seed,
                "entries": draw_multiset(store.subdivisions, replicate_rng(seed, r))}
               for r in range(n_replicates)]
    save_multisets(out_dir / "multisets.jsonl", records)

    point_path = out_dir / "point.json"
    if not (resume and point_path.exists()):
        ds = store.aggregate(scheme, store.subdivisions)
        result = fit_once(ds, options, rng=_fit_rng(seed, 0, stage=2))
        record = {"replicate": -1, "seed": seed, "multiset": store.subdivisions}
        record.update(result.to_record())
        _write_json(point_path, record)

    scheme_t = (scheme.steps_per_year, scheme.length_bin_cm, scheme.plus_group_age)
    todo = []
    for r in range(n_replicates):
        done = out_dir / f"replicate_{r:04d}.json"
        if resume and done.exists():
            continue
        err = out_dir / f"error_{r:04d}.json"
        if err.exists():
            err.unlink()
        todo.append((data_dir, scheme_t, asdict(options), seed, r, str(out_dir)))

    failures: list[tuple[int, str]] = []
    if workers <= 1:
        for args in todo:
            r, err = _replicate_task(args)
            if err is not None:
                failures.append((r, err))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for r, err in pool.map(_replicate_task, todo):
                if err is not None:
                    failures.append((r, err))

    n_done = sum(1 for r in range(n_replicates)
                 if (out_dir / f"replicate_{r:04d}.json").exists())
    n_failed = n_replicates - n_done
    summary = {"n_replicates": n_replicates, "n_done": n_done, "n_failed": n_failed,
               "out_dir": str(out_dir), "failures": failures}
    if n_failed > max_failure_frac * n_replicates:
        raise CampaignError(
            f"{n_failed} of {n_replicates} replicates failed "
            f"(limit {max_failure_frac:.0%}); see error_*.json in {out_dir}")
    return summary


def load_campaign(out_dir: str | Path) -> tuple[dict, list[dict]]:
    """Read a campaign directory: (point record, replicate records in order)."""
    out_dir = Path(out_dir)
    point_path = out_dir / "point.json"
    if not point_path.exists():
        raise CampaignError(f"no point estimate in {out_dir}")
    point = json.loads(point_path.read_text())
    reps = []
    for path in sorted(out_dir.glob("replicate_*.json")):
        reps.append(json.loads(path.read_text()))
    return point, reps

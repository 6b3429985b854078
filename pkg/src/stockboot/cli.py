"""Command line interface.

Subcommands cover the whole workflow: generate a synthetic dataset, validate
a data directory, dump an aggregated dataset to delimited files, run a single
estimation, run a bootstrap campaign, summarize a finished campaign into
tables and figures, and compare two campaigns. Numeric settings can come
from a JSON config file; explicit flags win over the config.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from .campaign import CampaignError, FitOptions, fit_once, run_campaign
from .reports import compare_runs, write_report
from .store import AggregationScheme, StoreError, load_store
from .synth import SynthSpec, write_dataset

SCHEME_KEYS = ("steps_per_year", "length_bin_cm", "plus_group_age", "survey_slices")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise CampaignError(f"config {path} must hold a JSON object")
    return cfg


def _parse_slices(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in text.split(","):
        lo, _, hi = part.partition(":")
        out.append((float(lo), float(hi)))
    return tuple(out)


def _scheme_from(args, cfg: dict) -> AggregationScheme:
    picked = {}
    for key, flag in (("steps_per_year", "steps"), ("length_bin_cm", "bin_cm"),
                      ("plus_group_age", "plus_age")):
        value = getattr(args, flag, None)
        if value is None:
            value = cfg.get(key)
        if value is not None:
            picked[key] = value
    slices = getattr(args, "slices", None)
    if slices is not None:
        picked["survey_slices"] = _parse_slices(slices)
    elif cfg.get("survey_slices") is not None:
        picked["survey_slices"] = tuple(tuple(s) for s in cfg["survey_slices"])
    return AggregationScheme(**picked)


def _options_from(args, cfg: dict) -> FitOptions:
    picked = {}
    for f in dataclass_fields(FitOptions):
        value = getattr(args, f.name, None)
        if value is None:
            value = cfg.get(f.name)
        if value is not None:
            picked[f.name] = value
    return FitOptions(**picked)


def _add_scheme_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--steps", type=int, choices=(12, 6, 4), default=None,
                        help="model steps per year (default 12)")
    parser.add_argument("--bin-cm", type=int, choices=(1, 2), default=None,
                        help="model length bin width in cm (default 1)")
    parser.add_argument("--plus-age", type=int, default=None,
                        help="plus group age (default 11)")
    parser.add_argument("--slices", default=None, metavar="LO:HI,LO:HI,...",
                        help="survey index length slices in cm (default min:25,25:45,45:max)")


def _add_fit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", default=None, choices=("1", "2", "3"),
                        help="model variant (default 1)")
    parser.add_argument("--component-evals", type=int, default=None, dest="component_evals",
                        help="evaluation budget per component during reweighting")
    parser.add_argument("--final-evals", type=int, default=None, dest="final_evals",
                        help="evaluation budget for the final optimization")
    parser.add_argument("--burn-evals", type=int, default=None, dest="burn_evals",
                        help="equal-weights burn-in budget (model variants that use it)")
    parser.add_argument("--sa-evals", type=int, default=None, dest="sa_evals",
                        help="annealing evaluations inside each cold optimization")
    parser.add_argument("--final-sa-evals", type=int, default=None, dest="final_sa_evals",
                        help="annealing evaluations inside the final optimization")
    parser.add_argument("--tol", type=float, default=None,
                        help="pattern search step tolerance")
    parser.add_argument("--config", default=None,
                        help="JSON file with scheme and budget settings (flags win)")


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        seed=args.seed, n_subdivisions=args.subdivisions, n_years=args.years,
        first_year=args.first_year, steps_per_year=args.steps or 12,
        length_bin_cm=args.bin_cm or 1, dispersion=args.dispersion,
        station_noise=args.station_noise,
        harvest_rate=args.harvest, spring_intensity=args.spring,
        fall_intensity_frac=args.fall_frac, com_intensity=args.com,
        smar_start=args.smar_start, smar_aldist_start=args.aldist_start,
        soct_start=args.soct_start, maturity_start=args.maturity_start,
        smar_end=args.smar_end, soct_end=args.soct_end, com_end=args.com_end,
    )
    truth = write_dataset(spec, args.out_dir)
    print(f"wrote synthetic dataset to {args.out_dir} "
          f"({spec.n_subdivisions} subdivisions, {spec.n_years} years)")
    print(f"true parameters in {Path(args.out_dir) / 'truth.json'} "
          f"({len(truth)} parameters)")
    return 0


def _cmd_ingest(args) -> int:
    store = load_store(args.data_dir)
    y0, y1 = store.year_range
    a0, a1 = store.age_range
    l0, l1 = store.length_range
    print(f"data directory {args.data_dir} is valid")
    print(f"  years        {y0}..{y1}")
    print(f"  ages         {a0}..{a1}")
    print(f"  lengths      {l0}..{l1} cm")
    print(f"  subdivisions {len(store.subdivisions)}: {', '.join(store.subdivisions)}")
    print(f"  data units   {len(store.units)}")
    return 0


def _cmd_extract(args) -> int:
    cfg = _load_config(args.config)
    store = load_store(args.data_dir)
    scheme = _scheme_from(args, cfg)
    scheme.validate_against(store)
    subdivisions = (args.subdivisions.split(",") if args.subdivisions
                    else store.subdivisions)
    ds = store.aggregate(scheme, subdivisions)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def write(name, header, rows):
        path = out / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        print(f"wrote {path}")

    years = ds.first_year + np.arange(ds.n_years)
    rows = [(src, int(years[y]), s, int(ds.bin_lowers[j]), float(v))
            for src, arr in sorted(ds.ldist.items())
            for (y, s, j), v in np.ndenumerate(arr) if v > 0]
    write("ldist.csv", ["source", "year", "step", "bin_lower_cm", "count"], rows)

    rows = [(src, int(years[y]), s, int(ds.ages[a]), int(ds.bin_lowers[j]), float(v))
            for src, arr in sorted(ds.aldist.items())
            for (y, s, a, j), v in np.ndenumerate(arr) if v > 0]
    write("aldist.csv", ["source", "year", "step", "age", "bin_lower_cm", "count"], rows)

    rows = [(src, k + 1, int(years[y]), float(v))
            for src, arr in sorted(ds.survey_index.items())
            for (k, y), v in np.ndenumerate(arr)]
    write("survey_index.csv", ["source", "slice", "year", "total_count"], rows)

    rows = [(int(years[y]), int(ds.bin_lowers[j]), float(imm), float(ds.maturity_mature[y, j]))
            for (y, j), imm in np.ndenumerate(ds.maturity_immature)
            if imm > 0 or ds.maturity_mature[y, j] > 0]
    write("maturity.csv", ["year", "bin_lower_cm", "immature", "mature"], rows)

    rows = [(int(years[y]), s, float(v)) for (y, s), v in np.ndenumerate(ds.landings)]
    write("landings.csv", ["year", "step", "tonnes"], rows)
    return 0


def _cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    store = load_store(args.data_dir)
    scheme = _scheme_from(args, cfg)
    scheme.validate_against(store)
    options = _options_from(args, cfg)
    if args.seed is not None:
        options.seed = args.seed
    ds = store.aggregate(scheme, store.subdivisions)
    result = fit_once(ds, options)

    print(f"model {options.model}: objective {result.fun:.6g} after "
          f"{result.n_evals} evaluations "
          f"({'converged' if result.converged else 'budget exhausted'})")
    if result.degenerate:
        print(f"degenerate components: {', '.join(result.degenerate)}")
    if result.shortfall_kt > 0:
        print(f"unpayable landings: {result.shortfall_kt:.3f} kt")
    for name, value in result.params.items():
        print(f"  {name:>12s}  {value:.6g}")

    if args.out:
        record = {"replicate": -1, "seed": options.seed,
                  "multiset": store.subdivisions}
        record.update(result.to_record())
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")
        print(f"wrote {args.out}")
    if args.trace_csv:
        with open(args.trace_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["evaluation", "objective"])
            writer.writerows(result.trace)
        print(f"wrote {args.trace_csv}")
    return 0


def _cmd_bootstrap(args) -> int:
    cfg = _load_config(args.config)
    scheme = _scheme_from(args, cfg)
    options = _options_from(args, cfg)
    summary = run_campaign(
        args.data_dir, args.out_dir, scheme, options,
        n_replicates=args.replicates, seed=args.seed, workers=args.workers,
        resume=args.resume, max_failure_frac=args.max_failure_frac)
    print(f"campaign in {summary['out_dir']}: {summary['n_done']} of "
          f"{summary['n_replicates']} replicates done, {summary['n_failed']} failed")
    for r, message in summary["failures"]:
        print(f"  replicate {r}: {message}", file=sys.stderr)
    return 0


def _cmd_report(args) -> int:
    paths = write_report(args.campaign_dir, args.out, bins=args.bins)
    for path in paths.values():
        print(f"wrote {path}")
    return 0


def _cmd_compare(args) -> int:
    labels = tuple(args.labels.split(","))
    if len(labels) != 2:
        raise CampaignError("--labels needs exactly two comma-separated names")
    paths = compare_runs(args.dir_a, args.dir_b, args.out_dir, labels=labels)
    for path in paths.values():
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stockboot",
        description="Bootstrap bias and variance estimation for age-length "
                    "structured stock models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with known truth")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subdivisions", type=int, default=10)
    p.add_argument("--years", type=int, default=20)
    p.add_argument("--first-year", type=int, default=1984)
    p.add_argument("--steps", type=int, choices=(12, 6, 4), default=None,
                   help="data resolution in steps per year (default 12)")
    p.add_argument("--bin-cm", type=int, choices=(1, 2), default=None,
                   help="length bin width of the generated data (default 1)")
    p.add_argument("--dispersion", type=float, default=0.0,
                   help="lognormal count noise scale (0 = noise free)")
    p.add_argument("--station-noise", type=float, default=0.0,
                   help="per-subdivision survey catchability spread at spring effort")
    p.add_argument("--harvest", type=float, default=0.22)
    p.add_argument("--spring", type=float, default=3000.0,
                   help="spring survey sampling intensity")
    p.add_argument("--fall-frac", type=float, default=0.5,
                   help="fall survey intensity relative to spring")
    p.add_argument("--com", type=float, default=400.0,
                   help="commercial fish measured per sampled month")
    p.add_argument("--smar-start", type=int, default=1)
    p.add_argument("--aldist-start", type=int, default=5)
    p.add_argument("--soct-start", type=int, default=11)
    p.add_argument("--maturity-start", type=int, default=1)
    p.add_argument("--smar-end", type=int, default=None,
                   help="year offset one past the last spring survey year")
    p.add_argument("--soct-end", type=int, default=None)
    p.add_argument("--com-end", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate a data directory and summarize it")
    p.add_argument("data_dir")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("extract", help="aggregate the full data and dump it as CSV")
    p.add_argument("data_dir")
    p.add_argument("out_dir")
    p.add_argument("--subdivisions", default=None,
                   help="comma-separated multiset of subdivisions (default: all, once each)")
    _add_scheme_flags(p)
    p.add_argument("--config", default=None,
                   help="JSON file with scheme settings (flags win)")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("fit", help="single estimation on the full data")
    p.add_argument("data_dir")
    p.add_argument("--out", default=None, help="write the fit record to this JSON file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trace-csv", default=None, dest="trace_csv",
                   help="write (evaluation, objective) improvement log to this CSV")
    _add_scheme_flags(p)
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("bootstrap", help="bootstrap campaign over subdivisions")
    p.add_argument("data_dir")
    p.add_argument("out_dir")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true",
                   help="continue an existing campaign, keeping finished replicates")
    p.add_argument("--max-failure-frac", type=float, default=0.2, dest="max_failure_frac",
                   help="abort if more than this fraction of replicates fail")
    _add_scheme_flags(p)
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("report", help="summarize a finished campaign")
    p.add_argument("campaign_dir")
    p.add_argument("--out", default=None, help="report directory (default <campaign>/report)")
    p.add_argument("--bins", type=int, default=15, help="histogram bin count")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("compare", help="compare two finished campaigns")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    p.add_argument("out_dir")
    p.add_argument("--labels", default="a,b", help="two comma-separated run labels")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StoreError, CampaignError, ValueError, OSError, RuntimeError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

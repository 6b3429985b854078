"""Post-processing of campaign directories into tables and figures.

A report turns the point estimate plus replicate records into four delimited
files (parameter draws, bootstrap statistics, biomass trajectories, histogram
bins) and renders companion PNG figures next to them. Two finished campaigns
over the same stock can be compared year by year and parameter by parameter.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .campaign import CampaignError, load_campaign

PERCENTILES = (2.5, 25.0, 50.0, 75.0, 97.5)
HEAD_ORDER = ("k", "beta_lu", "sel_com", "sel_smar", "sel_soct", "mat_l50", "mat_alpha")


def _param_order(names) -> list[str]:
    """Stable display order: curve parameters, then cohorts by year and age."""
    names = set(names)
    ordered = [n for n in HEAD_ORDER if n in names]
    ordered += sorted((n for n in names if n.startswith("rec_")),
                      key=lambda n: int(n.rsplit("_", 1)[1]))
    ordered += sorted((n for n in names if n.startswith("init_age")),
                      key=lambda n: int(n[len("init_age"):]))
    rest = names.difference(ordered)
    return ordered + sorted(rest)


def _read_meta(campaign_dir: Path) -> dict:
    path = campaign_dir / "campaign.json"
    return json.loads(path.read_text()) if path.exists() else {}


def parameter_matrix(point: dict, reps: list[dict]):
    """Replicate draws as one dense array: (names, point values, draws)."""
    if not reps:
        raise CampaignError("no replicates to summarize")
    names = _param_order(point["params"])
    for rec in reps:
        if set(rec["params"]) != set(names):
            raise CampaignError("replicate parameter sets differ from the point estimate")
    point_vals = np.array([point["params"][n] for n in names])
    draws = np.array([[rec["params"][n] for n in names] for rec in reps])
    return names, point_vals, draws


def bootstrap_stats(names, point_vals, draws) -> list[dict]:
    """Location, spread, bias and percentiles of the draws, one row per quantity.

    Bias is the point estimate minus the bootstrap mean; the standardized
    bias divides that by the bootstrap standard deviation.
    """
    rows = []
    for j, name in enumerate(names):
        values = draws[:, j]
        mean = float(values.mean())
        sd = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        bias = float(point_vals[j]) - mean
        row = {
            "quantity": name,
            "point": float(point_vals[j]),
            "mean": mean,
            "sd": sd,
            "bias": bias,
            "std_bias": bias / sd if sd > 0 else 0.0,
            "n": len(values),
        }
        for p, v in zip(PERCENTILES, np.percentile(values, PERCENTILES)):
            row[f"p{p:g}"] = float(v)
        rows.append(row)
    return rows


def _write_csv(path: Path, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def _panel_grid(n: int):
    ncols = min(5, max(1, n))
    nrows = (n + ncols - 1) // ncols
    fig = Figure(figsize=(3.0 * ncols, 2.4 * nrows))
    axes = fig.subplots(nrows, ncols, squeeze=False).ravel()
    for ax in axes[n:]:
        ax.axis("off")
    return fig, axes


def _boxplot_figure(names, point_vals, draws) -> Figure:
    fig, axes = _panel_grid(len(names))
    for j, name in enumerate(names):
        ax = axes[j]
        ax.boxplot(draws[:, j], widths=0.5)
        ax.axhline(point_vals[j], color="tab:red", lw=1.0)
        ax.set_title(name, fontsize=9)
        ax.set_xticks([])
        ax.tick_params(labelsize=7)
    fig.suptitle("Bootstrap parameter distributions (red line: point estimate)")
    fig.tight_layout()
    return fig


def _histogram_figure(names, point_vals, draws, bins) -> Figure:
    fig, axes = _panel_grid(len(names))
    for j, name in enumerate(names):
        ax = axes[j]
        ax.hist(draws[:, j], bins=bins, color="tab:blue", alpha=0.75)
        ax.axvline(point_vals[j], color="tab:red", lw=1.0)
        ax.set_title(name, fontsize=9)
        ax.tick_params(labelsize=7)
    fig.suptitle("Bootstrap parameter histograms (red line: point estimate)")
    fig.tight_layout()
    return fig


def _trajectory_figure(years, point_traj, rep_trajs) -> Figure:
    fig = Figure(figsize=(8.0, 4.5))
    ax = fig.subplots()
    for traj in rep_trajs:
        ax.plot(years, traj, color="0.6", lw=0.7, alpha=0.5)
    ax.plot(years, rep_trajs.mean(axis=0), color="black", ls="--", lw=1.2,
            label="replicate mean")
    ax.plot(years, point_traj, color="tab:red", lw=1.8, label="point estimate")
    ax.set_xlabel("year")
    ax.set_ylabel("total biomass (kt)")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def _trajectories(meta, point, reps):
    first_year = meta.get("first_year", 0)
    point_traj = np.asarray(point["biomass_kt"], dtype=float)
    rep_trajs = np.array([rec["biomass_kt"] for rec in reps], dtype=float)
    if rep_trajs.shape[1] != point_traj.size:
        raise CampaignError("replicate trajectories differ in length from the point estimate")
    years = first_year + np.arange(point_traj.size)
    return years, point_traj, rep_trajs


def write_report(campaign_dir: str | Path, report_dir: str | Path | None = None,
                 bins: int = 15) -> dict[str, Path]:
    """Summarize one campaign into CSV tables and PNG figures.

    Returns a mapping from artifact name to the written path. The report
    directory defaults to ``<campaign_dir>/report``.
    """
    campaign_dir = Path(campaign_dir)
    report_dir = Path(report_dir) if report_dir is not None else campaign_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    point, reps = load_campaign(campaign_dir)
    meta = _read_meta(campaign_dir)
    names, point_vals, draws = parameter_matrix(point, reps)
    paths: dict[str, Path] = {}

    rows = []
    for label, rec in [("point", point)] + [(rec["replicate"], rec) for rec in reps]:
        row = {"replicate": label, "fun": rec["fun"], "converged": rec["converged"]}
        row.update({n: rec["params"][n] for n in names})
        rows.append(row)
    paths["parameters"] = report_dir / "parameters.csv"
    _write_csv(paths["parameters"], ["replicate", "fun", "converged", *names], rows)

    years, point_traj, rep_trajs = _trajectories(meta, point, reps)
    stats = bootstrap_stats(names, point_vals, draws)
    stats += bootstrap_stats([f"biomass_{y}" for y in years], point_traj, rep_trajs)
    paths["stats"] = report_dir / "boxplot_stats.csv"
    _write_csv(paths["stats"], list(stats[0].keys()), stats)

    rows = [{"replicate": "point", "year": int(y), "biomass_kt": float(b)}
            for y, b in zip(years, point_traj)]
    for rec, traj in zip(reps, rep_trajs):
        rows += [{"replicate": rec["replicate"], "year": int(y), "biomass_kt": float(b)}
                 for y, b in zip(years, traj)]
    paths["trajectories"] = report_dir / "trajectories.csv"
    _write_csv(paths["trajectories"], ["replicate", "year", "biomass_kt"], rows)

    rows = []
    for j, name in enumerate(names):
        counts, edges = np.histogram(draws[:, j], bins=bins)
        rows += [{"parameter": name, "bin_left": float(edges[i]),
                  "bin_right": float(edges[i + 1]), "count": int(c)}
                 for i, c in enumerate(counts)]
    paths["histograms"] = report_dir / "histogram_bins.csv"
    _write_csv(paths["histograms"], ["parameter", "bin_left", "bin_right", "count"], rows)

    figures = {
        "boxplot_png": ("parameters_boxplot.png", _boxplot_figure(names, point_vals, draws)),
        "histograms_png": ("parameters_hist.png", _histogram_figure(names, point_vals, draws, bins)),
        "trajectories_png": ("biomass_trajectories.png",
                             _trajectory_figure(years, point_traj, rep_trajs)),
    }
    for key, (fname, fig) in figures.items():
        paths[key] = report_dir / fname
        fig.savefig(paths[key], dpi=110)
    return paths


def compare_runs(dir_a: str | Path, dir_b: str | Path, out_dir: str | Path,
                 labels: tuple[str, str] = ("a", "b")) -> dict[str, Path]:
    """Compare two finished campaigns over their common years and parameters.

    Writes a per-year biomass table, a per-parameter table and one overlay
    figure. Raises if the campaigns share no years. Comparing a campaign with
    itself yields all-zero difference columns.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    la, lb = labels
    if la == lb:
        la, lb = f"{la}_1", f"{lb}_2"
    runs = {}
    for label, d in ((la, Path(dir_a)), (lb, Path(dir_b))):
        point, reps = load_campaign(d)
        meta = _read_meta(d)
        names, point_vals, draws = parameter_matrix(point, reps)
        years, point_traj, rep_trajs = _trajectories(meta, point, reps)
        runs[label] = {
            "params": dict(zip(names, point_vals)),
            "means": dict(zip(names, draws.mean(axis=0))),
            "sds": dict(zip(names, draws.std(axis=0, ddof=1) if len(draws) > 1
                            else np.zeros(len(names)))),
            "years": years, "point_traj": point_traj, "rep_trajs": rep_trajs,
        }
    common_years = sorted(set(runs[la]["years"]).intersection(runs[lb]["years"]))
    if not common_years:
        raise CampaignError("campaigns share no years; nothing to compare")
    paths: dict[str, Path] = {}

    rows = []
    for y in common_years:
        row = {"year": int(y)}
        for label in (la, lb):
            r = runs[label]
            i = int(np.where(r["years"] == y)[0][0])
            row[f"point_{label}"] = float(r["point_traj"][i])
            row[f"mean_{label}"] = float(r["rep_trajs"][:, i].mean())
            row[f"sd_{label}"] = (float(r["rep_trajs"][:, i].std(ddof=1))
                                  if len(r["rep_trajs"]) > 1 else 0.0)
        row["mean_diff"] = row[f"mean_{lb}"] - row[f"mean_{la}"]
        row["point_diff"] = row[f"point_{lb}"] - row[f"point_{la}"]
        rows.append(row)
    paths["biomass"] = out_dir / "biomass_compare.csv"
    _write_csv(paths["biomass"], list(rows[0].keys()), rows)

    shared = [n for n in _param_order(runs[la]["params"]) if n in runs[lb]["params"]]
    rows = []
    for name in shared:
        row = {"parameter": name}
        for label in (la, lb):
            r = runs[label]
            row[f"point_{label}"] = float(r["params"][name])
            row[f"mean_{label}"] = float(r["means"][name])
            row[f"sd_{label}"] = float(r["sds"][name])
        row["mean_diff"] = row[f"mean_{lb}"] - row[f"mean_{la}"]
        row["point_diff"] = row[f"point_{lb}"] - row[f"point_{la}"]
        rows.append(row)
    paths["parameters"] = out_dir / "parameters_compare.csv"
    _write_csv(paths["parameters"], list(rows[0].keys()), rows)

    fig = Figure(figsize=(8.0, 4.5))
    ax = fig.subplots()
    for label, color in ((la, "tab:blue"), (lb, "tab:orange")):
        r = runs[label]
        mask = np.isin(r["years"], common_years)
        years = r["years"][mask]
        mean = r["rep_trajs"][:, mask].mean(axis=0)
        sd = (r["rep_trajs"][:, mask].std(axis=0, ddof=1)
              if len(r["rep_trajs"]) > 1 else np.zeros(mask.sum()))
        ax.plot(years, mean, color=color, lw=1.6, label=f"{label} mean")
        ax.fill_between(years, mean - sd, mean + sd, color=color, alpha=0.2)
        ax.plot(years, r["point_traj"][mask], color=color, ls=":", lw=1.2,
                label=f"{label} point")
    ax.set_xlabel("year")
    ax.set_ylabel("total biomass (kt)")
    ax.legend(frameon=False)
    fig.tight_layout()
    paths["figure"] = out_dir / "biomass_compare.png"
    fig.savefig(paths["figure"], dpi=110)
    return paths

"""Synthetic dataset generator with a known ground truth.

Runs the forward model at chosen true parameter values and turns its
predicted compositions into elementary data units spread over spatial
subdivisions. Landings are derived from the model itself (a fixed harvest
rate applied to selected biomass) so the population can always supply them.
Survey sample sizes are proportional to selected abundance, which keeps the
abundance signal in the survey indices; commercial sampling uses a fixed
target per sampling month, mimicking port sampling effort.

With dispersion zero the generated counts are exact multiples of the model's
predictions, so fitting the generating scheme recovers the truth with a zero
objective. Positive dispersion draws whole-fish counts per cell from a
Poisson distribution around a mean-one lognormal modulation of the expected
value, so sparse cells yield occasional single fish while dense cells stay
smooth and everything remains unbiased. Positive station_noise gives each
survey a persistent catchability factor per subdivision, with a spread that
grows as survey effort shrinks: surveys revisit a fixed station grid every
year, so a sparser grid means each subdivision's density is measured with a
larger, repeatable bias. The factors come from a separate random stream so
the commercial data are unchanged by survey noise settings.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .popdyn import ModelConfig, ParamLayout, logistic_curve, simulate
from .store import AggregationScheme, DataStore, ingest_rows, save_store


@dataclass
class SynthSpec:
    """Everything that defines one synthetic dataset."""

    seed: int = 0
    n_subdivisions: int = 10
    n_years: int = 20
    first_year: int = 1984
    age_range: tuple[int, int] = (1, 11)
    length_range: tuple[int, int] = (4, 130)
    steps_per_year: int = 12
    length_bin_cm: int = 1
    dispersion: float = 0.0
    harvest_rate: float = 0.22            # per year, applied to selected biomass
    spring_intensity: float = 3000.0      # mean measured fish per spring survey year
    fall_intensity_frac: float = 0.5      # fall effort relative to spring
    com_intensity: float = 400.0          # measured fish per commercial sampling month
    aldist_frac: float = 0.25             # aged subsample fraction
    maturity_frac: float = 0.5            # maturity staging fraction of survey catch
    station_noise: float = 0.0            # survey catchability spread at spring effort
    com_months: tuple[int, ...] = (2, 5, 8, 11)
    smar_start: int = 1                   # year offsets of first coverage
    smar_aldist_start: int = 5
    soct_start: int = 11
    maturity_start: int = 1
    smar_end: int | None = None           # year offsets one past last coverage
    soct_end: int | None = None           # (None runs to the final year)
    com_end: int | None = None
    share_amplitude: float = 0.3          # year to year wobble of subdivision shares
    min_count: float = 1e-6               # cells below this are not written
    truth_overrides: dict = field(default_factory=dict)

    def subdivision_names(self) -> list[str]:
        return [f"d{i:02d}" for i in range(self.n_subdivisions)]

    def scheme(self) -> AggregationScheme:
        return AggregationScheme(self.steps_per_year, self.length_bin_cm,
                                 plus_group_age=self.age_range[1])


def truth_params(spec: SynthSpec) -> dict[str, float]:
    """True parameter values: smooth recruitment wave over a declining start."""
    vals = {
        "k": 0.12, "beta_lu": 30.0, "sel_com": 38.0, "sel_smar": 20.0,
        "sel_soct": 24.0, "mat_l50": 45.0, "mat_alpha": 0.25,
    }
    for y in range(spec.n_years):
        vals[f"rec_{spec.first_year + y}"] = 30.0 * float(np.exp(0.35 * np.sin(1.3 * y + 0.5)))
    for a in range(spec.age_range[0] + 1, spec.age_range[1] + 1):
        vals[f"init_age{a}"] = 35.0 * float(np.exp(-0.25 * (a - 1)))
    vals.update(spec.truth_overrides)
    return vals


def subdivision_shares(spec: SynthSpec) -> np.ndarray:
    """Share of each year's samples landing in each subdivision, (nsub, ny).

    Columns sum to one. Shares are uneven across subdivisions and drift
    smoothly across years, so resampling subdivisions reweights years
    relative to each other instead of rescaling everything uniformly.
    """
    n, ny = spec.n_subdivisions, spec.n_years
    base = np.linspace(0.5, 1.5, n)
    years = np.arange(ny)
    phase = 2.0 * np.pi * np.arange(n)[:, None] / n
    w = base[:, None] * (1.0 + spec.share_amplitude * np.sin(phase + 0.37 * years[None, :]))
    return w / w.sum(axis=0, keepdims=True)


def _model_setup(spec: SynthSpec):
    truth = truth_params(spec)
    l0, l1 = spec.length_range
    bins = np.arange(l0, l1, spec.length_bin_cm, dtype=float)
    config = ModelConfig(
        n_years=spec.n_years, steps_per_year=spec.steps_per_year,
        bin_lowers=bins, bin_width=float(spec.length_bin_cm),
        ages=np.arange(spec.age_range[0], spec.age_range[1] + 1),
        landings_kt=np.zeros((spec.n_years, spec.steps_per_year)),
        first_year=spec.first_year,
    )
    layout = ParamLayout(config)
    x = layout.pack(truth)

    def run():
        return simulate(config, x[0], x[1], x[layout.rec_slice], x[layout.init_slice], x[2])

    # find landings consistent with a constant harvest rate on the fished
    # stock: naive one-pass landings (rate times unfished biomass) starve the
    # population, so iterate to the fixed point with damping
    rate = spec.harvest_rate / spec.steps_per_year
    landings = np.zeros((spec.n_years, spec.steps_per_year))
    for _ in range(80):
        config.landings_kt = landings
        new = rate * run().bsel_kt
        if np.allclose(new, landings, rtol=1e-12, atol=1e-14):
            landings = new
            break
        landings = 0.5 * landings + 0.5 * new
    else:
        raise RuntimeError("harvest rate iteration did not converge")
    config.landings_kt = landings
    res = run()
    if res.shortfall.sum() > 0:
        raise RuntimeError("derived landings exceed what the stock can supply")
    return truth, config, layout, x, res


def generate_rows(spec: SynthSpec):
    """Produce the four row lists plus the truth parameter dictionary."""
    truth, config, layout, x, res = _model_setup(spec)
    # one stream per data family, so noise settings or coverage changes in
    # one family never shift the draws of another
    rng_svy = np.random.default_rng(np.random.SeedSequence((spec.seed, 7001)))
    rng_station = np.random.default_rng(np.random.SeedSequence((spec.seed, 7002)))
    rng_com = np.random.default_rng(np.random.SeedSequence((spec.seed, 7003)))
    shares = subdivision_shares(spec)
    subs = spec.subdivision_names()
    ny, S = spec.n_years, spec.steps_per_year
    width = spec.length_bin_cm
    l0 = spec.length_range[0]
    d = spec.dispersion

    def noisy(counts: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        if d <= 0:
            return counts
        lam = counts * np.exp(d * gen.standard_normal(counts.shape) - 0.5 * d * d)
        return gen.poisson(lam).astype(float)

    def fine(v: np.ndarray) -> np.ndarray:
        # model bins to 1 cm rows; a 2 cm bin splits evenly
        return v if width == 1 else np.repeat(v / width, width, axis=-1)

    length_rows, al_rows, mat_rows, land_rows = [], [], [], []

    def emit_lengths(si, year, month, source, counts_1cm):
        for b, c in enumerate(counts_1cm):
            if c >= spec.min_count:
                length_rows.append((subs[si], year, month, source, l0 + b, float(c)))

    def emit_ages(si, year, month, source, counts_1cm):
        nages = counts_1cm.shape[0]
        for a in range(nages):
            for b, c in enumerate(counts_1cm[a]):
                if c >= spec.min_count:
                    al_rows.append((subs[si], year, month, source,
                                    config.ages[a], l0 + b, float(c)))

    # -- surveys: counts proportional to selection-weighted abundance
    smar_end = ny if spec.smar_end is None else spec.smar_end
    soct_end = ny if spec.soct_end is None else spec.soct_end
    survey_cov = {"smar": range(spec.smar_start, smar_end),
                  "soct": range(spec.soct_start, soct_end)}
    aldist_cov = {"smar": range(spec.smar_aldist_start, smar_end),
                  "soct": range(spec.soct_start, soct_end)}
    months = {"smar": 3, "soct": 10}
    intensity = {"smar": spec.spring_intensity,
                 "soct": spec.spring_intensity * spec.fall_intensity_frac}
    sel_par = {"smar": x[3], "soct": x[4]}
    # ogive per written 1 cm row, constant within a model bin so that
    # reaggregated proportions reproduce the model-bin ogive exactly
    ogive_fine = np.repeat(logistic_curve(config.mids, x[5], x[6]), width)
    for src in ("smar", "soct"):
        sel = logistic_curve(config.mids, sel_par[src], config.sel_steepness)
        weighted = res.survey_state(src) * sel            # (ny, nages, nbins)
        years = [y for y in survey_cov[src] if y < ny]
        if not years:
            continue
        mean_abund = np.mean([weighted[y].sum() for y in years])
        q0 = intensity[src] / mean_abund
        # persistent per-subdivision catchability of the fixed station grid:
        # a survey covering a subdivision with fewer stations measures its
        # density with a larger repeatable bias, so the lognormal scale grows
        # as effort shrinks
        sigma = spec.station_noise / np.sqrt(intensity[src] / spec.spring_intensity)
        factor = np.ones(spec.n_subdivisions)
        if sigma > 0:
            factor = np.exp(sigma * rng_station.standard_normal(spec.n_subdivisions)
                            - 0.5 * sigma * sigma)
        for y in years:
            year = spec.first_year + y
            month = months[src]
            for si in range(spec.n_subdivisions):
                w = q0 * shares[si, y] * factor[si]
                emit_lengths(si, year, month, src,
                             noisy(fine(w * weighted[y].sum(axis=0)), rng_svy))
                if y in aldist_cov[src]:
                    emit_ages(si, year, month, src,
                              noisy(fine(w * spec.aldist_frac * weighted[y]), rng_svy))
                if src == "smar" and y >= spec.maturity_start:
                    total_f = fine(w * spec.maturity_frac * weighted[y].sum(axis=0))
                    mature = noisy(total_f * ogive_fine, rng_svy)
                    imm = noisy(total_f * (1.0 - ogive_fine), rng_svy)
                    for b in range(total_f.size):
                        m_c, i_c = float(mature[b]), float(imm[b])
                        if m_c + i_c >= spec.min_count:
                            mat_rows.append((subs[si], year, month, src, l0 + b, i_c, m_c))

    # -- commercial: fixed sampling target per month
    com_end = ny if spec.com_end is None else spec.com_end
    for y in range(com_end):
        year = spec.first_year + y
        for month in spec.com_months:
            s = (month - 1) // (12 // S)
            comp = res.catch[y, s]
            tot = comp.sum()
            if tot <= 0:
                continue
            base = spec.com_intensity * comp / tot        # (nages, nbins)
            for si in range(spec.n_subdivisions):
                w = shares[si, y]
                emit_lengths(si, year, month, "com",
                             noisy(fine(w * base.sum(axis=0)), rng_com))
                emit_ages(si, year, month, "com",
                          noisy(fine(w * spec.aldist_frac * base), rng_com))

    # -- landings: exact, spread over months and subdivisions, in tonnes
    mps = 12 // S
    for y in range(ny):
        year = spec.first_year + y
        for s in range(S):
            step_tonnes = config.landings_kt[y, s] * 1000.0
            for m_off in range(mps):
                month = s * mps + m_off + 1
                for si in range(spec.n_subdivisions):
                    t = step_tonnes * shares[si, y] / mps
                    if t > 0:
                        land_rows.append((subs[si], year, month, float(t)))

    rows = {
        "length_rows": length_rows, "age_length_rows": al_rows,
        "maturity_rows": mat_rows, "landings_rows": land_rows,
        "year_range": (spec.first_year, spec.first_year + ny - 1),
        "age_range": spec.age_range, "length_range": spec.length_range,
    }
    return rows, truth


def build_store(spec: SynthSpec) -> tuple[DataStore, dict[str, float]]:
    """Generate and ingest in one go, skipping the filesystem."""
    rows, truth = generate_rows(spec)
    store = ingest_rows(rows["length_rows"], rows["age_length_rows"],
                        rows["maturity_rows"], rows["landings_rows"],
                        year_range=rows["year_range"], age_range=rows["age_range"],
                        length_range=rows["length_range"])
    return store, truth


def write_dataset(spec: SynthSpec, directory: str | Path) -> dict[str, float]:
    """Write CSVs, manifest and the ground truth next to them."""
    directory = Path(directory)
    rows, truth = generate_rows(spec)
    save_store(rows, directory)
    (directory / "truth.json").write_text(json.dumps({
        "params": truth, "spec": asdict(spec),
    }, indent=1))
    return truth

"""Forward age-length structured population model.

State is numbers-at-age-and-length (millions of fish). Each time step the
population grows along the length axis through a beta-binomial transition
matrix, suffers natural mortality, and loses the reported landings through a
length-selective harvest. Ageing and recruitment happen at year boundaries.

Units: lengths cm, weights kg, abundances millions, biomass and landings
thousand tonnes (millions x kg = kt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, gammaln

from ._kernel import run_forward
from .store import ModelDataset

LINF_CM = 180.0
NATURAL_MORTALITY = 0.2
SEL_STEEPNESS = 0.25
WEIGHT_A_KG = 6.8e-6
WEIGHT_B = 3.0
INIT_SPREAD_CV = 0.1
MAX_REMOVAL_FRAC = 0.95
SURVEY_MONTHS = {"smar": 3, "soct": 10}
MAX_JUMP_CM_PER_MONTH = 15.0


@dataclass
class ModelConfig:
    """Dimensions and fixed quantities of one model run."""

    n_years: int
    steps_per_year: int
    bin_lowers: np.ndarray
    bin_width: float
    ages: np.ndarray                       # modelled ages, oldest is the plus group
    landings_kt: np.ndarray                # (n_years, steps_per_year)
    first_year: int = 0
    ref_k: float = 0.12
    linf: float = LINF_CM
    nat_m: float = NATURAL_MORTALITY
    sel_steepness: float = SEL_STEEPNESS
    weight_a: float = WEIGHT_A_KG
    weight_b: float = WEIGHT_B
    init_cv: float = INIT_SPREAD_CV
    max_removal: float = MAX_REMOVAL_FRAC
    _growth_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.bin_lowers = np.ascontiguousarray(self.bin_lowers, dtype=np.float64)
        self.landings_kt = np.ascontiguousarray(self.landings_kt, dtype=np.float64)
        self.ages = np.asarray(self.ages)
        if self.landings_kt.shape != (self.n_years, self.steps_per_year):
            raise ValueError("landings array does not match years x steps")

    @classmethod
    def from_dataset(cls, ds: ModelDataset, **overrides) -> "ModelConfig":
        return cls(
            n_years=ds.n_years,
            steps_per_year=ds.scheme.steps_per_year,
            bin_lowers=ds.bin_lowers,
            bin_width=float(ds.scheme.length_bin_cm),
            ages=ds.ages,
            landings_kt=ds.landings / 1000.0,
            first_year=ds.first_year,
            **overrides,
        )

    @property
    def dt(self) -> float:
        return 1.0 / self.steps_per_year

    @property
    def mids(self) -> np.ndarray:
        return self.bin_lowers + 0.5 * self.bin_width

    @property
    def n_bins(self) -> int:
        return self.bin_lowers.size

    @property
    def n_ages(self) -> int:
        return self.ages.size

    def survey_step(self, source: str) -> int:
        month = SURVEY_MONTHS[source]
        return (month - 1) // (12 // self.steps_per_year)

    def weight_kg(self) -> np.ndarray:
        return self.weight_a * self.mids ** self.weight_b

    def mean_length_at_age(self, k: float) -> np.ndarray:
        return self.linf * (1.0 - np.exp(-k * self.ages.astype(float)))


def logistic_curve(mids: np.ndarray, l50: float, steepness: float) -> np.ndarray:
    """Logistic selection or maturity curve over bin midpoints."""
    return 1.0 / (1.0 + np.exp(-steepness * (mids - l50)))


def normal_bin_masses(mean: float, sd: float, lowers: np.ndarray, width: float) -> np.ndarray:
    """Probability mass per bin of a Normal, tails lumped into the edge bins."""
    edges = np.append(lowers, lowers[-1] + width)
    z = (edges - mean) / max(sd * math.sqrt(2.0), 1e-300)
    cdf = 0.5 * (1.0 + erf(z))
    mass = np.diff(cdf)
    mass[0] += cdf[0]
    mass[-1] += 1.0 - cdf[-1]
    return mass


def growth_increment(mids: np.ndarray, k: float, dt: float, linf: float) -> np.ndarray:
    """Mean length increment per step from the von Bertalanffy curve."""
    return np.maximum(linf - mids, 0.0) * (1.0 - math.exp(-k * dt))


def growth_matrix(config: ModelConfig, k: float, beta_lu: float) -> np.ndarray:
    """Beta-binomial length transition matrix for one time step.

    The increment in bins is beta-binomially distributed on 0..J with mean
    matched to the von Bertalanffy increment; the dispersion parameter
    ``beta_lu`` is the beta shape (larger is tighter). Jumps beyond the last
    bin accumulate there, so every row sums to one.
    """
    key = (round(k, 12), round(beta_lu, 12))
    cached = config._growth_cache.get(key)
    if cached is not None:
        return cached
    nbins = config.n_bins
    J = int(math.ceil(MAX_JUMP_CM_PER_MONTH * (config.dt * 12.0) / config.bin_width))
    mu = growth_increment(config.mids, k, config.dt, config.linf) / config.bin_width
    mu = np.clip(mu, 0.0, J)
    j = np.arange(J + 1)
    log_choose = gammaln(J + 1) - gammaln(j + 1) - gammaln(J - j + 1)
    G = np.zeros((nbins, nbins))
    for l in range(nbins):
        m = mu[l]
        if m <= 1e-12:
            pmf = np.zeros(J + 1)
            pmf[0] = 1.0
        elif m >= J - 1e-9:
            pmf = np.zeros(J + 1)
            pmf[-1] = 1.0
        else:
            alpha = beta_lu * m / (J - m)
            logp = (log_choose
                    + gammaln(j + alpha) + gammaln(J - j + beta_lu)
                    - gammaln(J + alpha + beta_lu)
                    + gammaln(alpha + beta_lu) - gammaln(alpha) - gammaln(beta_lu))
            pmf = np.exp(logp)
            pmf /= pmf.sum()
        dest = np.minimum(l + j, nbins - 1)
        np.add.at(G[l], dest, pmf)
    G = np.ascontiguousarray(G)
    if len(config._growth_cache) >= 32:
        config._growth_cache.clear()
    config._growth_cache[key] = G
    return G


class ParamLayout:
    """Flat parameter vector layout shared by the objective and optimizer.

    Order: k, beta_lu, three selection midpoints, two maturity parameters,
    one recruitment per year, one initial abundance per age above the
    youngest. Recruitments and initial abundances live on a log scale during
    optimization; the rest are linearly scaled.
    """

    def __init__(self, config: ModelConfig):
        self.n_years = config.n_years
        self.ages = np.asarray(config.ages)
        self.names: list[str] = [
            "k", "beta_lu", "sel_com", "sel_smar", "sel_soct", "mat_l50", "mat_alpha",
        ]
        self.names += [f"rec_{config.first_year + y}" for y in range(config.n_years)]
        self.names += [f"init_age{a}" for a in self.ages[1:]]
        self.size = len(self.names)
        self.rec_slice = slice(7, 7 + config.n_years)
        self.init_slice = slice(7 + config.n_years, self.size)
        lo = np.empty(self.size)
        hi = np.empty(self.size)
        scale = np.ones(self.size)
        log = np.zeros(self.size, dtype=bool)
        head = {
            "k": (0.01, 1.0, 0.1),
            "beta_lu": (0.5, 5000.0, 50.0),
            "sel_com": (5.0, 150.0, 40.0),
            "sel_smar": (5.0, 150.0, 40.0),
            "sel_soct": (5.0, 150.0, 40.0),
            "mat_l50": (5.0, 150.0, 40.0),
            "mat_alpha": (0.01, 2.0, 0.2),
        }
        for i, name in enumerate(self.names):
            if name in head:
                lo[i], hi[i], scale[i] = head[name]
            else:
                lo[i], hi[i], scale[i] = 1e-4, 1e5, 1.0
                log[i] = True
        self.lower = lo
        self.upper = hi
        self.scale = scale
        self.log_scale = log

    def pack(self, values: dict[str, float]) -> np.ndarray:
        missing = [n for n in self.names if n not in values]
        if missing:
            raise KeyError(f"missing parameters: {missing[:3]}{'...' if len(missing) > 3 else ''}")
        return np.array([float(values[n]) for n in self.names])

    def unpack(self, vec: np.ndarray) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, vec)}

    def to_scaled(self, x: np.ndarray) -> np.ndarray:
        z = np.asarray(x, dtype=float) / self.scale
        z[self.log_scale] = np.log(np.asarray(x, dtype=float)[self.log_scale] / self.scale[self.log_scale])
        return z

    def from_scaled(self, z: np.ndarray) -> np.ndarray:
        x = np.asarray(z, dtype=float) * self.scale
        x[self.log_scale] = np.exp(np.asarray(z, dtype=float)[self.log_scale]) * self.scale[self.log_scale]
        return x

    def scaled_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.to_scaled(self.lower), self.to_scaled(self.upper)


@dataclass
class SimResult:
    """Raw state snapshots from one forward run."""

    n_smar: np.ndarray       # (ny, nages, nbins) at the start of the March survey step
    n_soct: np.ndarray       # (ny, nages, nbins) at the start of the October survey step
    catch: np.ndarray        # (ny, S, nages, nbins) removals by the landings fleet
    n_eoy: np.ndarray        # (ny, nages, nbins) end of year, before ageing
    shortfall: np.ndarray    # (ny, S) landings (kt) the population could not supply
    bsel_kt: np.ndarray      # (ny, S) selected biomass at the point of harvest

    def survey_state(self, source: str) -> np.ndarray:
        return self.n_smar if source == "smar" else self.n_soct

    def biomass_kt(self, weight_kg: np.ndarray) -> np.ndarray:
        return np.tensordot(self.n_eoy, weight_kg, axes=([2], [0])).sum(axis=1)


def simulate(config: ModelConfig, k: float, beta_lu: float, rec: np.ndarray,
             init_older: np.ndarray, sel_com_l50: float,
             init_spread_k: float | None = None) -> SimResult:
    """Run the population forward under one parameter set.

    ``rec[y]`` is the abundance of the cohort aged 1 in year y (``rec[0]``
    is part of the initial population); ``init_older`` holds the start
    abundances of ages above the youngest. Survey and maturity parameters do
    not influence the dynamics, only the observation model, so they are not
    arguments here. ``init_spread_k`` pins the mean lengths used to spread
    starting cohorts and recruits to a reference growth rate; by default they
    follow ``k``.
    """
    ny, S = config.n_years, config.steps_per_year
    nages, nbins = config.n_ages, config.n_bins
    rec = np.asarray(rec, dtype=float)
    init_older = np.asarray(init_older, dtype=float)
    if rec.shape != (ny,) or init_older.shape != (nages - 1,):
        raise ValueError("parameter vector sizes do not match the configuration")

    mean_len = config.mean_length_at_age(k if init_spread_k is None else init_spread_k)
    spread = np.empty((nages, nbins))
    for i in range(nages):
        spread[i] = normal_bin_masses(mean_len[i], config.init_cv * mean_len[i],
                                      config.bin_lowers, config.bin_width)
    n0 = np.empty((nages, nbins))
    n0[0] = rec[0] * spread[0]
    for i in range(1, nages):
        n0[i] = init_older[i - 1] * spread[i]

    G = growth_matrix(config, k, beta_lu)
    sel_com = logistic_curve(config.mids, sel_com_l50, config.sel_steepness)
    weight = config.weight_kg()
    n_smar = np.zeros((ny, nages, nbins))
    n_soct = np.zeros((ny, nages, nbins))
    catch = np.zeros((ny, S, nages, nbins))
    n_eoy = np.zeros((ny, nages, nbins))
    shortfall = np.zeros((ny, S))
    bsel = np.zeros((ny, S))
    run_forward(n0, G, math.exp(-config.nat_m * config.dt),
                np.ascontiguousarray(sel_com), np.ascontiguousarray(weight),
                config.landings_kt, rec, np.ascontiguousarray(spread[0]),
                config.survey_step("smar"), config.survey_step("soct"),
                config.max_removal, n_smar, n_soct, catch, n_eoy, shortfall, bsel)
    return SimResult(n_smar, n_soct, catch, n_eoy, shortfall, bsel)


def simulate_params(config: ModelConfig, layout: ParamLayout, x: np.ndarray,
                    init_spread_k: float | None = None) -> SimResult:
    """Run the model from a flat parameter vector in layout order."""
    x = np.asarray(x, dtype=float)
    return simulate(config, k=x[0], beta_lu=x[1], rec=x[layout.rec_slice],
                    init_older=x[layout.init_slice], sel_com_l50=x[2],
                    init_spread_k=init_spread_k)

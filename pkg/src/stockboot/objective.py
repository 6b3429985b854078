"""Composite sum-of-squares objective linking the model to the data.

Ten likelihood components: length compositions and age-length compositions
for the commercial fleet and both surveys, three survey abundance indices
(one per length slice, each pooling the two surveys), and the maturity
ogive. Compositions are compared as proportions within (year, step) groups;
survey indices through a log-linear regression whose intercept (and
optionally slope) is profiled out analytically at every evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .popdyn import ModelConfig, ParamLayout, logistic_curve, simulate
from .store import ModelDataset

COMPONENTS = (
    "ldist_com", "ldist_smar", "ldist_soct",
    "aldist_com", "aldist_smar", "aldist_soct",
    "si_slice1", "si_slice2", "si_slice3",
    "maturity",
)

SI_FLOOR = 1e-30  # predicted slice abundance floor before taking logs


@dataclass(frozen=True)
class ModelVariant:
    """Observation-model switches distinguishing the numbered model setups.

    ``init_lengths`` chooses whether starting cohorts are spread around mean
    lengths from a fixed reference growth rate or from the estimated one.
    ``beta_slices`` lists slice indices whose survey-index slope is estimated
    rather than held at one. ``burn_in`` asks the fitting routine for an
    equal-weights optimization pass before reweighting.
    """

    name: str
    init_lengths: str = "from_k"
    beta_slices: tuple[int, ...] = ()
    burn_in: bool = False

    def __post_init__(self):
        if self.init_lengths not in ("fixed", "from_k"):
            raise ValueError("init_lengths must be 'fixed' or 'from_k'")


MODELS = {
    "1": ModelVariant("1", init_lengths="fixed"),
    "2": ModelVariant("2", init_lengths="fixed", beta_slices=(0, 1), burn_in=True),
    "3": ModelVariant("3", init_lengths="from_k"),
}


def composition_ss(p_obs: np.ndarray, pred: np.ndarray) -> float:
    """Sum of squared proportion differences over stacked groups.

    ``p_obs`` holds observed proportions per group row; ``pred`` the raw
    predicted amounts. A group whose predicted total is not positive gets a
    zero predicted proportion everywhere, which penalizes a collapsed
    population by the full observed mass.
    """
    tot = pred.sum(axis=1)
    good = tot > 0
    p_pred = np.zeros_like(pred)
    np.divide(pred, tot[:, None], out=p_pred, where=good[:, None])
    d = p_obs - p_pred
    return float((d * d).sum())


def profile_loglinear(ln_n: np.ndarray, ln_u: np.ndarray, estimate_slope: bool) -> tuple[float, float]:
    """Closed-form fit of ln U = alpha + beta ln N.

    With ``estimate_slope`` the slope is the usual least-squares ratio,
    needing at least three points and nonzero spread in ln N; otherwise (and
    in the degenerate cases) the slope is held at one and only the intercept
    is profiled.
    """
    if estimate_slope and ln_n.size >= 3:
        dx = ln_n - ln_n.mean()
        vx = float(dx @ dx)
        if vx > 1e-30:
            beta = float(dx @ (ln_u - ln_u.mean())) / vx
            return float(ln_u.mean() - beta * ln_n.mean()), beta
    return float((ln_u - ln_n).mean()), 1.0


def _stack_groups(obs: np.ndarray):
    """Group rows of nonzero observations along all leading axes.

    Returns index arrays (one per leading axis) and the observed proportion
    matrix, rows normalized to one.
    """
    flat = obs.reshape(obs.shape[0], -1) if obs.ndim == 2 else obs.reshape(obs.shape[:-1] + (-1,))
    tot = flat.sum(axis=-1)
    idx = np.nonzero(tot > 0)
    p = flat[idx] / tot[idx][:, None]
    return idx, p


class Objective:
    """Weighted composite objective for one dataset and model variant.

    The instance precomputes observed proportions and group indices once;
    ``evaluate`` then runs the forward model and returns the weighted total
    together with the raw per-component sums of squares.

    Calling the instance gives the value minimized during estimation: the
    weighted total plus a feasibility penalty on the relative landings
    shortfall. Recorded landings are treated as exact, so a parameter vector
    under which the population cannot supply them is inconsistent with the
    catch history no matter how well the compositions match; without the
    penalty a fishery starved by an extreme selection curve can drive single
    components toward zero and earn enormous weights during reweighting. The
    penalty is identically zero whenever the simulated stock covers the
    landings, which holds at any reasonable fit.
    """

    def __init__(self, ds: ModelDataset, variant: ModelVariant | str = "1",
                 config: ModelConfig | None = None,
                 shortfall_penalty: float = 1e4):
        self.variant = MODELS[variant] if isinstance(variant, str) else variant
        self.config = config if config is not None else ModelConfig.from_dataset(ds)
        self.layout = ParamLayout(self.config)
        self.weights = np.ones(len(COMPONENTS))
        self.shortfall_penalty = shortfall_penalty
        self._landings_total = max(float(np.sum(self.config.landings_kt)), 1e-12)
        self._last_shortfall = 0.0
        ny = self.config.n_years

        # commercial compositions keep (year, step) groups
        self._com_ld_idx, self._com_ld_p = _stack_groups(ds.ldist["com"])
        al = ds.aldist["com"].reshape(ny, self.config.steps_per_year, -1)
        self._com_al_idx, self._com_al_p = _stack_groups(al)

        # survey compositions are annual (one survey pass per year)
        self._svy_ld = {}
        self._svy_al = {}
        for src in ("smar", "soct"):
            self._svy_ld[src] = _stack_groups(ds.ldist[src].sum(axis=1))
            self._svy_al[src] = _stack_groups(ds.aldist[src].sum(axis=1).reshape(ny, -1))

        # survey index series per slice and survey: covered years and ln U
        slice_of = ds.slice_of_bin()
        self._slice_masks = np.zeros((3, self.config.n_bins))
        for s in range(3):
            self._slice_masks[s, slice_of == s] = 1.0
        self._si = []
        for s in range(3):
            series = []
            for src in ("smar", "soct"):
                u = ds.survey_index[src][s]
                years = np.nonzero(u > 0)[0]
                if years.size:
                    series.append((src, years, np.log(u[years])))
            self._si.append(series)

        tot = ds.maturity_immature + ds.maturity_mature
        yi, bi = np.nonzero(tot > 0)
        self._mat_yi, self._mat_bi = yi, bi
        self._mat_p = ds.maturity_mature[yi, bi] / tot[yi, bi]

        self.has_data = np.array([
            self._com_ld_p.size > 0,
            self._svy_ld["smar"][1].size > 0,
            self._svy_ld["soct"][1].size > 0,
            self._com_al_p.size > 0,
            self._svy_al["smar"][1].size > 0,
            self._svy_al["soct"][1].size > 0,
            len(self._si[0]) > 0,
            len(self._si[1]) > 0,
            len(self._si[2]) > 0,
            self._mat_p.size > 0,
        ])
        self.n_evals = 0

    # -- evaluation --------------------------------------------------------

    def _simulate(self, x: np.ndarray):
        spread_k = self.config.ref_k if self.variant.init_lengths == "fixed" else None
        return simulate(self.config, x[0], x[1], x[self.layout.rec_slice],
                        x[self.layout.init_slice], x[2], init_spread_k=spread_k)

    def _survey_pred(self, res, x: np.ndarray) -> dict[str, np.ndarray]:
        """Selection-weighted survey state per source, (ny, nages, nbins)."""
        out = {}
        for j, src in enumerate(("smar", "soct")):
            sel = logistic_curve(self.config.mids, x[3 + j], self.config.sel_steepness)
            out[src] = res.survey_state(src) * sel
        return out

    def component_ss(self, x: np.ndarray) -> np.ndarray:
        """Raw sum of squares per component at parameter vector x."""
        x = np.asarray(x, dtype=float)
        res = self._simulate(x)
        self._last_shortfall = float(res.shortfall.sum())
        ny, S = self.config.n_years, self.config.steps_per_year
        ss = np.zeros(len(COMPONENTS))

        ld_com = res.catch.sum(axis=2)
        ss[0] = composition_ss(self._com_ld_p, ld_com[self._com_ld_idx])
        al_com = res.catch.reshape(ny, S, -1)
        ss[3] = composition_ss(self._com_al_p, al_com[self._com_al_idx])

        weighted = self._survey_pred(res, x)
        svy_abund = {}
        for j, src in enumerate(("smar", "soct")):
            ld = weighted[src].sum(axis=1)
            svy_abund[src] = ld
            idx, p = self._svy_ld[src]
            ss[1 + j] = composition_ss(p, ld[idx])
            idx, p = self._svy_al[src]
            ss[4 + j] = composition_ss(p, weighted[src].reshape(ny, -1)[idx])

        for s in range(3):
            acc = 0.0
            for src, years, ln_u in self._si[s]:
                pred = svy_abund[src][years] @ self._slice_masks[s]
                ln_n = np.log(np.maximum(pred, SI_FLOOR))
                alpha, beta = profile_loglinear(ln_n, ln_u, s in self.variant.beta_slices)
                r = ln_u - alpha - beta * ln_n
                acc += float(r @ r)
            ss[6 + s] = acc

        ogive = logistic_curve(self.config.mids, x[5], x[6])
        d = self._mat_p - ogive[self._mat_bi]
        ss[9] = float(d @ d)

        self.n_evals += 1
        return ss

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        ss = self.component_ss(x)
        return float(self.weights @ ss), ss

    def __call__(self, x: np.ndarray) -> float:
        total = self.evaluate(x)[0]
        rel = self._last_shortfall / self._landings_total
        return total + self.shortfall_penalty * rel * rel

    # -- diagnostics -------------------------------------------------------

    def max_residuals(self, x: np.ndarray) -> np.ndarray:
        """Largest absolute residual per component at x.

        Composition and maturity components report the worst proportion
        mismatch, index components the worst log-scale regression residual.
        Useful for verifying that a dataset is exactly reproducible.
        """
        x = np.asarray(x, dtype=float)
        res = self._simulate(x)
        ny, S = self.config.n_years, self.config.steps_per_year
        out = np.zeros(len(COMPONENTS))

        def worst(p_obs, pred):
            if p_obs.size == 0:
                return 0.0
            tot = pred.sum(axis=1)
            good = tot > 0
            p_pred = np.zeros_like(pred)
            np.divide(pred, tot[:, None], out=p_pred, where=good[:, None])
            return float(np.abs(p_obs - p_pred).max())

        ld_com = res.catch.sum(axis=2)
        out[0] = worst(self._com_ld_p, ld_com[self._com_ld_idx])
        al_com = res.catch.reshape(ny, S, -1)
        out[3] = worst(self._com_al_p, al_com[self._com_al_idx])

        weighted = self._survey_pred(res, x)
        for j, src in enumerate(("smar", "soct")):
            ld = weighted[src].sum(axis=1)
            idx, p = self._svy_ld[src]
            out[1 + j] = worst(p, ld[idx])
            idx, p = self._svy_al[src]
            out[4 + j] = worst(p, weighted[src].reshape(ny, -1)[idx])
            for s in range(3):
                for series_src, years, ln_u in self._si[s]:
                    if series_src != src:
                        continue
                    pred = ld[years] @ self._slice_masks[s]
                    ln_n = np.log(np.maximum(pred, SI_FLOOR))
                    alpha, beta = profile_loglinear(ln_n, ln_u, s in self.variant.beta_slices)
                    r = np.abs(ln_u - alpha - beta * ln_n)
                    out[6 + s] = max(out[6 + s], float(r.max()))

        ogive = logistic_curve(self.config.mids, x[5], x[6])
        if self._mat_p.size:
            out[9] = float(np.abs(self._mat_p - ogive[self._mat_bi]).max())
        return out

    def survey_fits(self, x: np.ndarray) -> dict[tuple[str, int], tuple[float, float]]:
        """Profiled (intercept, slope) per (survey, slice) at x."""
        x = np.asarray(x, dtype=float)
        res = self._simulate(x)
        weighted = self._survey_pred(res, x)
        fits = {}
        for s in range(3):
            for src, years, ln_u in self._si[s]:
                pred = (weighted[src].sum(axis=1))[years] @ self._slice_masks[s]
                ln_n = np.log(np.maximum(pred, SI_FLOOR))
                fits[(src, s)] = profile_loglinear(ln_n, ln_u, s in self.variant.beta_slices)
        return fits

    def biomass(self, x: np.ndarray) -> np.ndarray:
        """End-of-year total biomass trajectory (kt) at x."""
        x = np.asarray(x, dtype=float)
        return self._simulate(x).biomass_kt(self.config.weight_kg())

    def shortfall(self, x: np.ndarray) -> float:
        """Total landings (kt) the population failed to supply at x."""
        x = np.asarray(x, dtype=float)
        return float(self._simulate(x).shortfall.sum())

"""Bias and variance estimation for age-length structured stock models.

The package fits a forward age-length population model to length
distributions, age-length keys, survey abundance indices and maturity data,
then repeats the whole estimation (including objective reweighting) on block
bootstrap resamples of spatial subdivisions to measure estimation bias and
spread.
"""

from .campaign import (
    CampaignError,
    FitOptions,
    FitResult,
    fit_once,
    load_campaign,
    run_campaign,
)
from .objective import COMPONENTS, MODELS, ModelVariant, Objective
from .optim import OptimOptions, OptimResult, minimize
from .popdyn import ModelConfig, ParamLayout, SimResult, simulate, simulate_params
from .reports import bootstrap_stats, compare_runs, write_report
from .resample import bootstrap_multisets, draw_multiset, load_multisets, replicate_rng, save_multisets
from .store import (
    AggregationScheme,
    CellKey,
    DataStore,
    DataUnit,
    ModelDataset,
    StoreError,
    ingest_rows,
    load_store,
    save_store,
)
from .synth import SynthSpec, build_store, truth_params, write_dataset

__all__ = [
    "AggregationScheme",
    "COMPONENTS",
    "CampaignError",
    "CellKey",
    "DataStore",
    "DataUnit",
    "FitOptions",
    "FitResult",
    "MODELS",
    "ModelConfig",
    "ModelDataset",
    "ModelVariant",
    "Objective",
    "OptimOptions",
    "OptimResult",
    "ParamLayout",
    "SimResult",
    "StoreError",
    "SynthSpec",
    "bootstrap_multisets",
    "bootstrap_stats",
    "build_store",
    "compare_runs",
    "draw_multiset",
    "fit_once",
    "ingest_rows",
    "load_campaign",
    "load_multisets",
    "load_store",
    "minimize",
    "replicate_rng",
    "run_campaign",
    "save_multisets",
    "save_store",
    "simulate",
    "simulate_params",
    "truth_params",
    "write_dataset",
    "write_report",
]

__version__ = "0.1.0"

"""Explainable automated property valuation with neighbor-based imputation."""

from .domain import (
    DEFAULT_K,
    DEFAULT_SCHEMA,
    MISSING,
    Categorical,
    FeatureDecl,
    FeatureKind,
    FeatureSchema,
    LabelConstraint,
    Numeric,
    Property,
    PropertyConfiguration,
    PropertyType,
    RangeConstraint,
    SchemaMismatchError,
    Temporal,
    validate_configuration,
    validate_property,
)
from .evaluation import mape, mask_features, run_ablation
from .explain import build_prompt, compare_pairwise, generate_explanation
from .gbdt import GbdtModel, TrainParams, load_model, predict, save_model, train
from .imputation import impute_average, impute_neighbor, impute_none
from .ingest import Dataset, compute_stats, load_csv, save_csv
from .neighbors import filter_candidates, find_neighbors, minkowski_distance
from .synth import synth_corpus, synth_generate

__version__ = "0.1.0"

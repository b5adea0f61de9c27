"""Configuration-filtered nearest-neighbor search over a property corpus.

Candidates are first filtered by the user's per-feature acceptance
conditions, then ranked by a Minkowski distance over min-max-normalized
numeric features. Categorical features take part in filtering only; a
value difference between unordered labels has no magnitude.

Missing values are handled in two distinct ways:
  * under a user constraint, a missing value excludes the candidate — a
    stated condition cannot be verified against an absent value;
  * inside the distance, the sum runs over the jointly observed entries and
    is rescaled by n/m (n = numeric feature count, m = jointly observed
    count), keeping distances comparable across missingness patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import (
    Categorical,
    FeatureKind,
    FeatureSchema,
    LabelConstraint,
    Numeric,
    Property,
    PropertyConfiguration,
    RangeConstraint,
    is_missing,
)
from .ingest import Dataset, NormalizationStats

#: Exhaustive scan is the intended search strategy; guard against corpora the
#: linear scan was never sized for.
MAX_SCAN_RECORDS = 1_000_000


def normalize_value(value: float, minimum: float, maximum: float) -> float:
    """Min-max scale into [0, 1]; out-of-range sources clamp to the ends."""
    if math.isnan(minimum) or math.isnan(maximum):
        return math.nan
    if maximum > minimum:
        return min(max((value - minimum) / (maximum - minimum), 0.0), 1.0)
    # degenerate corpus range: every observed value is identical
    if value < minimum:
        return 0.0
    if value > maximum:
        return 1.0
    return 0.5


def feature_vector(p: Property, schema: FeatureSchema, stats: NormalizationStats) -> np.ndarray:
    """Normalized numeric features in schema order; NaN marks missing."""
    out = np.full(len(schema.numeric_names()), np.nan)
    for i, name in enumerate(schema.numeric_names()):
        v = p.feature(name)
        if isinstance(v, Numeric):
            st = stats.numeric[name]
            out[i] = normalize_value(v.value, st.minimum, st.maximum)
    return out


def minkowski_distance(x: np.ndarray, y: np.ndarray, p: float = 2.0) -> float:
    """Distance over the jointly observed entries, rescaled by n/m.

    D = ((n/m) * sum over jointly observed i of |x_i - y_i|**p) ** (1/p);
    with nothing missing this is the plain Minkowski distance. Returns NaN
    when m = 0 (no jointly observed entry): such a pair is incomparable and
    callers must exclude it from ranking.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"vector length mismatch: {x.shape} vs {y.shape}")
    distances = _batch_distances(y[None, :], x, p)
    return float(distances[0])


def _batch_distances(vectors: np.ndarray, target: np.ndarray, p: float) -> np.ndarray:
    """Distances of each row to the target. The sum accumulates left to right
    per feature so the one-row and many-row paths are bit-identical."""
    diff = np.abs(vectors - target)
    observed = ~np.isnan(diff)
    terms = np.where(observed, diff**p, 0.0)
    total = np.zeros(vectors.shape[0])
    for j in range(vectors.shape[1]):
        total = total + terms[:, j]
    m = observed.sum(axis=1)
    n = vectors.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = ((n / m) * total) ** (1.0 / p)
    out[m == 0] = np.nan
    return out


@dataclass(frozen=True)
class NeighborResult:
    neighbor: Property
    distance: float
    rank: int


@dataclass(frozen=True)
class NeighborSearchResult:
    """Ranked neighbors plus how many candidates survived the filter."""

    neighbors: tuple[NeighborResult, ...]
    candidate_count: int

    @property
    def status(self) -> str:
        return "ok" if self.candidate_count > 0 else "no_candidates"

    def properties(self) -> list[Property]:
        return [r.neighbor for r in self.neighbors]


def matches_configuration(p: Property, config: PropertyConfiguration) -> bool:
    """True iff every constrained feature is observed and inside its range/set."""
    for name, constraint in config.constraints.items():
        value = p.feature(name)
        if is_missing(value):
            return False
        if isinstance(constraint, RangeConstraint):
            if not isinstance(value, Numeric) or not constraint.contains(value.value):
                return False
        elif isinstance(constraint, LabelConstraint):
            if not isinstance(value, Categorical) or not constraint.contains(value.label):
                return False
    return True


def filter_candidates(config: PropertyConfiguration, dataset: Dataset) -> list[Property]:
    """Records surviving the configuration; unconstrained features never exclude."""
    return [p for p in dataset.records if matches_configuration(p, config)]


class _SearchIndex:
    """Per-dataset arrays for the vectorized scan, built once and cached."""

    def __init__(self, dataset: Dataset):
        schema = dataset.schema
        records = dataset.records
        self.ids = np.array([p.id for p in records])
        self.vectors = np.vstack([feature_vector(p, schema, dataset.stats)
                                  for p in records]) if records else np.empty((0, 0))
        self.numeric_raw: dict[str, np.ndarray] = {}
        self.labels: dict[str, list[str | None]] = {}
        for decl in schema:
            if decl.kind is FeatureKind.NUMERIC:
                col = np.full(len(records), np.nan)
                for i, p in enumerate(records):
                    v = p.feature(decl.name)
                    if isinstance(v, Numeric):
                        col[i] = v.value
                self.numeric_raw[decl.name] = col
            elif decl.kind is FeatureKind.CATEGORICAL:
                self.labels[decl.name] = [
                    v.label if isinstance(v := p.feature(decl.name), Categorical) else None
                    for p in records]

    def candidate_mask(self, config: PropertyConfiguration) -> np.ndarray:
        mask = np.ones(len(self.ids), dtype=bool)
        for name, constraint in config.constraints.items():
            if isinstance(constraint, RangeConstraint):
                col = self.numeric_raw.get(name)
                if col is None:
                    mask[:] = False
                    break
                ok = ~np.isnan(col)
                if constraint.lower is not None:
                    ok &= col >= constraint.lower
                if constraint.upper is not None:
                    ok &= col <= constraint.upper
                mask &= ok
            else:
                labels = self.labels.get(name)
                if labels is None:
                    mask[:] = False
                    break
                mask &= np.array([lbl is not None and lbl in constraint.allowed
                                  for lbl in labels])
        return mask


def _search_index(dataset: Dataset) -> _SearchIndex:
    index = getattr(dataset, "_search_index", None)
    if index is None:
        index = _SearchIndex(dataset)
        dataset._search_index = index
    return index


def find_neighbors(target: Property, config: PropertyConfiguration, dataset: Dataset,
                   k: int | None = None, p: float = 2.0) -> NeighborSearchResult:
    """The k nearest filtered candidates, the target's own record excluded.

    Ties in distance break by ascending neighbor id, so identical inputs
    always yield the identical ranked list. Pairs with no jointly observed
    numeric feature are incomparable and never returned. Fewer than k
    results come back when candidates are scarce.
    """
    k = config.k if k is None else k
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(dataset.records) > MAX_SCAN_RECORDS:
        raise ValueError(f"corpus exceeds the {MAX_SCAN_RECORDS}-record scan limit")

    index = _search_index(dataset)
    mask = index.candidate_mask(config)
    mask &= index.ids != target.id
    candidate_count = int(np.count_nonzero(mask))
    if candidate_count == 0:
        return NeighborSearchResult((), 0)

    t = feature_vector(target, dataset.schema, dataset.stats)
    distances = _batch_distances(index.vectors[mask], t, p)
    comparable = ~np.isnan(distances)
    cand_rows = np.flatnonzero(mask)[comparable]
    distances = distances[comparable]
    order = np.lexsort((index.ids[cand_rows], distances))[:k]
    neighbors = tuple(
        NeighborResult(dataset.records[cand_rows[j]], float(distances[j]), rank)
        for rank, j in enumerate(order, start=1))
    return NeighborSearchResult(neighbors, candidate_count)

"""Completing a target property's missing features.

Three strategies: values taken from the selected neighbors (mean / most
frequent / most recent by feature kind), corpus-wide averages, or nothing at
all. Every filled feature is traced in an ImputationReport so the UI can
show users exactly what was imputed and from where. Imputation works on raw
feature values, never on normalized vectors: imputed values are shown to
users in native units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Sequence

from .domain import (
    MISSING,
    Categorical,
    FeatureKind,
    FeatureSchema,
    FeatureValue,
    Numeric,
    Property,
    Temporal,
    is_missing,
)
from .ingest import NormalizationStats

CORPUS_SOURCE = "corpus-stats"

STRATEGY_NEIGHBOR = "neighbor"
STRATEGY_AVERAGE = "average"
STRATEGY_NONE = "none"


@dataclass(frozen=True)
class ImputedFeature:
    feature: str
    value: FeatureValue
    strategy: str
    source: tuple[str, ...]   # contributing neighbor ids, or ("corpus-stats",)
    support: int              # observations backing the imputed value
    fallback: bool = False    # neighbor strategy fell back to corpus stats


@dataclass(frozen=True)
class ImputationReport:
    """Exactly the features that were missing on input and filled on output.

    ``unresolved`` lists features that stayed missing because nothing could
    support a value (e.g. a feature with zero corpus observations).
    """

    entries: tuple[ImputedFeature, ...]
    unresolved: tuple[str, ...] = ()

    @property
    def used_fallback(self) -> bool:
        return any(e.fallback for e in self.entries)

    def imputed_names(self) -> tuple[str, ...]:
        return tuple(e.feature for e in self.entries)


def _average_value(name: str, kind: FeatureKind, stats: NormalizationStats,
                   ) -> tuple[FeatureValue, int]:
    """Corpus-level substitute for one feature: mean / modal label / latest."""
    if kind is FeatureKind.NUMERIC:
        st = stats.numeric[name]
        if st.count == 0 or math.isnan(st.mean):
            return MISSING, 0
        return Numeric(st.mean), st.count
    if kind is FeatureKind.CATEGORICAL:
        st = stats.categorical[name]
        label = st.modal_label()
        if label is None:
            return MISSING, 0
        return Categorical(label), st.count
    st = stats.temporal[name]
    if st.count == 0 or st.latest_date is None:
        return MISSING, 0
    return Temporal(st.latest_date, st.latest_value), st.count


def impute_average(target: Property, stats: NormalizationStats, schema: FeatureSchema,
                   ) -> tuple[Property, ImputationReport]:
    """Fill every missing feature from corpus-wide statistics."""
    updates: dict[str, FeatureValue] = {}
    entries: list[ImputedFeature] = []
    unresolved: list[str] = []
    for decl in schema:
        if not is_missing(target.feature(decl.name)):
            continue
        value, support = _average_value(decl.name, decl.kind, stats)
        if is_missing(value):
            unresolved.append(decl.name)
            continue
        updates[decl.name] = value
        entries.append(ImputedFeature(decl.name, value, STRATEGY_AVERAGE,
                                      (CORPUS_SOURCE,), support))
    completed = target.with_features(updates) if updates else target
    return completed, ImputationReport(tuple(entries), tuple(unresolved))


def _neighbor_numeric(values: Sequence[tuple[str, float]]) -> tuple[Numeric, tuple[str, ...]]:
    xs = [v for _, v in values]
    mean = math.fsum(xs) / len(xs)
    # guard against the last rounding step drifting past the contributors
    mean = min(max(mean, min(xs)), max(xs))
    return Numeric(mean), tuple(nid for nid, _ in values)


def _neighbor_categorical(neighbors: Sequence[Property], name: str,
                          ) -> tuple[Categorical, tuple[str, ...]]:
    """Most frequent label; ties go to the label backed by the most recent
    transaction, then to the lexicographically smallest label."""
    by_label: dict[str, list[Property]] = {}
    for nb in neighbors:
        v = nb.feature(name)
        if isinstance(v, Categorical):
            by_label.setdefault(v.label, []).append(nb)
    def sort_key(label: str):
        supporters = by_label[label]
        newest = max((nb.transaction_date for nb in supporters
                      if nb.transaction_date is not None), default=date.min)
        return (-len(supporters), -newest.toordinal(), label)
    winner = min(by_label, key=sort_key)
    return Categorical(winner), tuple(nb.id for nb in by_label[winner])


def _neighbor_temporal(entries: Sequence[tuple[str, Temporal]],
                       ) -> tuple[Temporal, tuple[str, ...]]:
    """The most recently dated observation; date ties go to the smallest id."""
    nid, value = min(entries, key=lambda e: (-e[1].observed_on.toordinal(), e[0]))
    return value, (nid,)


def impute_neighbor(target: Property, neighbors: Sequence[Property],
                    schema: FeatureSchema, stats: NormalizationStats,
                    ) -> tuple[Property, ImputationReport]:
    """Fill missing features from the neighbor list.

    Numeric features take the mean of the neighbors' observed values,
    categorical the most frequent label, temporal the most recently dated
    value. Any feature no neighbor can support falls back to the corpus
    average for that feature, marked in the report; an empty neighbor list
    degrades to a full average imputation.
    """
    updates: dict[str, FeatureValue] = {}
    entries: list[ImputedFeature] = []
    unresolved: list[str] = []
    for decl in schema:
        if not is_missing(target.feature(decl.name)):
            continue
        value: FeatureValue = MISSING
        source: tuple[str, ...] = ()
        if decl.kind is FeatureKind.NUMERIC:
            observed = [(nb.id, v.value) for nb in neighbors
                        if isinstance(v := nb.feature(decl.name), Numeric)]
            if observed:
                value, source = _neighbor_numeric(observed)
        elif decl.kind is FeatureKind.CATEGORICAL:
            if any(isinstance(nb.feature(decl.name), Categorical) for nb in neighbors):
                value, source = _neighbor_categorical(neighbors, decl.name)
        else:
            observed = [(nb.id, v) for nb in neighbors
                        if isinstance(v := nb.feature(decl.name), Temporal)]
            if observed:
                value, source = _neighbor_temporal(observed)

        if not is_missing(value):
            updates[decl.name] = value
            entries.append(ImputedFeature(decl.name, value, STRATEGY_NEIGHBOR,
                                          source, len(source)))
            continue
        value, support = _average_value(decl.name, decl.kind, stats)
        if is_missing(value):
            unresolved.append(decl.name)
            continue
        updates[decl.name] = value
        entries.append(ImputedFeature(decl.name, value, STRATEGY_AVERAGE,
                                      (CORPUS_SOURCE,), support, fallback=True))
    completed = target.with_features(updates) if updates else target
    return completed, ImputationReport(tuple(entries), tuple(unresolved))


def impute_none(target: Property) -> tuple[Property, ImputationReport]:
    """Identity: missing values flow to the model's native missing handling."""
    return target, ImputationReport(())

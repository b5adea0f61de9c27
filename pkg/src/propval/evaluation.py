"""MAPE metric, the user-simulation masking protocol, and the four-arm
imputation ablation.

The ablation simulates a user who supplies only a few features: every test
record is masked at a fixed rate (coordinates and house age always kept),
then valued four ways — with its full features ("ideal", the performance
upper bound), with the masked record as-is ("none"), after corpus-average
imputation, and after neighbor imputation over the training corpus. All
four arms see identical masked instances per seed, and the neighbor corpus
never contains test records.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from io import StringIO
from typing import Mapping, Sequence

import numpy as np

from .domain import MISSING, Property, PropertyConfiguration, PropertyType
from .gbdt import TrainParams, encode_properties, train
from .imputation import impute_average, impute_neighbor
from .ingest import Dataset
from .neighbors import find_neighbors

STRATEGIES = ("ideal", "neighbor", "average", "none")

DEFAULT_MASK_RATE = 0.5
DEFAULT_KEEP_ALWAYS = frozenset({"latitude", "longitude", "house_age"})

_SPLIT_STREAM = 101
_MASK_STREAM = 202


def mape(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean absolute percentage error: 100/N * sum |a_i - p_i| / a_i."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("actual and predicted must be equal-length, non-empty vectors")
    if np.any(a <= 0):
        raise ValueError("MAPE requires strictly positive actual values")
    return float((100.0 / a.size) * np.sum(np.abs(a - p) / a))


def mask_features(p: Property, mask_rate: float, keep_always: frozenset[str] | set[str],
                  seed) -> Property:
    """Independently hide each maskable feature with probability mask_rate.

    Deterministic for a fixed seed; features are visited in sorted-name order
    so the draw sequence does not depend on dict insertion order.
    """
    if not 0.0 <= mask_rate <= 1.0:
        raise ValueError("mask_rate must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    updates = {}
    for name in sorted(p.features):
        if name in keep_always:
            continue
        if rng.uniform() < mask_rate:
            updates[name] = MISSING
    return p.with_features(updates) if updates else p


@dataclass(frozen=True)
class AblationCell:
    property_type: PropertyType
    strategy: str
    mape_mean: float
    mape_std: float
    per_seed: tuple[float, ...]
    n_test: int
    fallback_count: int   # neighbor-arm instances that needed corpus fallback


@dataclass(frozen=True)
class AblationResult:
    cells: tuple[AblationCell, ...]
    mask_rate: float
    seeds: tuple[int, ...]
    keep_always: tuple[str, ...]

    def cell(self, ptype: PropertyType, strategy: str) -> AblationCell:
        for c in self.cells:
            if c.property_type is ptype and c.strategy == strategy:
                return c
        raise KeyError((ptype, strategy))

    def to_csv(self) -> str:
        out = StringIO()
        out.write("property_type,strategy,mape_mean,mape_std,n_test,fallback_count\n")
        for c in self.cells:
            out.write(f"{c.property_type.value},{c.strategy},{c.mape_mean:.6f},"
                      f"{c.mape_std:.6f},{c.n_test},{c.fallback_count}\n")
        return out.getvalue()

    def to_table(self) -> str:
        """Aligned text grid: one row per property type, one column per arm."""
        types = sorted({c.property_type for c in self.cells}, key=lambda t: t.value)
        header = f"{'MAPE % (mean ± std)':<22}" + "".join(f"{s:>20}" for s in STRATEGIES)
        lines = [header, "-" * len(header)]
        for t in types:
            row = f"{t.value:<22}"
            for s in STRATEGIES:
                c = self.cell(t, s)
                row += f"{c.mape_mean:>13.2f} ±{c.mape_std:>5.2f}"
            lines.append(row)
        lines.append(f"(mask rate {self.mask_rate}, seeds {list(self.seeds)}, "
                     f"always kept: {', '.join(self.keep_always)})")
        return "\n".join(lines)


def split_train_test(dataset: Dataset, seed: int, train_fraction: float = 0.8,
                     ) -> tuple[Dataset, list[Property]]:
    """Seeded-shuffle split; the train side is rebuilt as a full Dataset with
    its own stats so nothing about the test records leaks into imputation."""
    rng = np.random.default_rng([seed, _SPLIT_STREAM])
    order = rng.permutation(len(dataset.records))
    cut = int(len(order) * train_fraction)
    records = dataset.records
    train_records = [records[i] for i in order[:cut]]
    test_records = [records[i] for i in order[cut:]]
    return Dataset.build(dataset.schema, dataset.property_type, train_records), test_records


def _evaluate_type(dataset: Dataset, params: TrainParams, config: PropertyConfiguration,
                   k: int, mask_rate: float, keep_always: frozenset[str],
                   seeds: Sequence[int]) -> dict[str, tuple[list[float], int, int]]:
    per_strategy: dict[str, list[float]] = {s: [] for s in STRATEGIES}
    fallback_total = 0
    n_test_last = 0
    for seed in seeds:
        train_ds, test_records = split_train_test(dataset, seed)
        model = train(train_ds, replace(params, seed=seed))
        schema = dataset.schema
        stats = train_ds.stats

        masked = [mask_features(rec, mask_rate, keep_always, [seed, _MASK_STREAM, i])
                  for i, rec in enumerate(test_records)]
        neighbor_completed = []
        for instance in masked:
            found = find_neighbors(instance, config, train_ds, k=k)
            completed, report = impute_neighbor(instance, found.properties(),
                                                schema, stats)
            neighbor_completed.append(completed)
            if report.used_fallback or found.status != "ok":
                fallback_total += 1
        average_completed = [impute_average(instance, stats, schema)[0]
                             for instance in masked]

        actual = [rec.unit_price for rec in test_records]
        arms = {
            "ideal": test_records,
            "none": masked,
            "average": average_completed,
            "neighbor": neighbor_completed,
        }
        for name, instances in arms.items():
            predicted = model.predict_matrix(encode_properties(instances, model.features))
            per_strategy[name].append(mape(actual, predicted))
        n_test_last = len(test_records)
    return {s: (vals, n_test_last, fallback_total if s == "neighbor" else 0)
            for s, vals in per_strategy.items()}


def run_ablation(datasets: Mapping[PropertyType, Dataset] | Sequence[Dataset],
                 params: TrainParams = TrainParams(),
                 config: PropertyConfiguration | None = None,
                 k: int = 6,
                 mask_rate: float = DEFAULT_MASK_RATE,
                 seeds: Sequence[int] = (0, 1, 2, 3, 4),
                 keep_always: frozenset[str] = DEFAULT_KEEP_ALWAYS,
                 ) -> AblationResult:
    """Evaluate all four imputation arms on identical masked test instances.

    Per (type, seed): 80/20 seeded split, one model trained on the train
    side, every test record masked once and then valued under each arm.
    Reruns with the same seeds reproduce every cell exactly.
    """
    if isinstance(datasets, Mapping):
        items = sorted(datasets.items(), key=lambda kv: kv[0].value)
    else:
        items = sorted(((d.property_type, d) for d in datasets), key=lambda kv: kv[0].value)
    config = config or PropertyConfiguration(k=k)
    cells = []
    for ptype, dataset in items:
        results = _evaluate_type(dataset, params, config, k, mask_rate,
                                 frozenset(keep_always), seeds)
        for strategy in STRATEGIES:
            values, n_test, fallbacks = results[strategy]
            arr = np.array(values)
            cells.append(AblationCell(ptype, strategy, float(arr.mean()),
                                      float(arr.std()), tuple(values), n_test, fallbacks))
    return AblationResult(tuple(cells), mask_rate, tuple(seeds),
                          tuple(sorted(keep_always)))

"""Corpus loading, normalization statistics, and on-disk artifact layout.

CSV conventions: empty cell = missing, ISO-8601 dates, decimal point only.
Temporal cells hold ``YYYY-MM-DD:value``. Stats are computed once at ingest
with exact (order-independent) summation and persisted beside the dataset;
the serving path never rescans the corpus.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .domain import (
    MISSING,
    Categorical,
    FeatureDecl,
    FeatureKind,
    FeatureSchema,
    FeatureValue,
    Numeric,
    Property,
    PropertyType,
    SchemaMismatchError,
    Temporal,
    is_missing,
    validate_property,
)

STATS_FORMAT_VERSION = 1

BASE_COLUMNS = ("id", "type", "address", "transaction_date", "unit_price")
REQUIRED_COLUMNS = ("id", "type", "unit_price")


@dataclass(frozen=True)
class NumericStats:
    minimum: float
    maximum: float
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class CategoricalStats:
    frequencies: Mapping[str, int]

    @property
    def count(self) -> int:
        return sum(self.frequencies.values())

    def modal_label(self) -> str | None:
        """Most frequent label; ties resolved to the lexicographically smallest."""
        if not self.frequencies:
            return None
        return min(self.frequencies, key=lambda lbl: (-self.frequencies[lbl], lbl))


@dataclass(frozen=True)
class TemporalStats:
    latest_date: date | None
    latest_value: float | None
    minimum: float
    maximum: float
    count: int


@dataclass(frozen=True)
class NormalizationStats:
    numeric: Mapping[str, NumericStats]
    categorical: Mapping[str, CategoricalStats]
    temporal: Mapping[str, TemporalStats]

    def observed_count(self, name: str) -> int:
        for table in (self.numeric, self.categorical, self.temporal):
            if name in table:
                return table[name].count
        raise KeyError(name)

    def unobserved_features(self) -> tuple[str, ...]:
        """Features with zero observations, flagged for callers."""
        names = []
        for table in (self.numeric, self.categorical, self.temporal):
            names.extend(n for n, s in table.items() if s.count == 0)
        return tuple(sorted(names))


def compute_stats(schema: FeatureSchema, records: Sequence[Property]) -> NormalizationStats:
    """Per-feature statistics over non-missing values.

    Sums use ``math.fsum`` so the result is exactly permutation-invariant.
    """
    numeric: dict[str, NumericStats] = {}
    categorical: dict[str, CategoricalStats] = {}
    temporal: dict[str, TemporalStats] = {}
    for decl in schema:
        values = [p.feature(decl.name) for p in records]
        values = [v for v in values if not is_missing(v)]
        if decl.kind is FeatureKind.NUMERIC:
            xs = [v.value for v in values]
            if xs:
                mean = math.fsum(xs) / len(xs)
                var = math.fsum((x - mean) ** 2 for x in xs) / len(xs)
                numeric[decl.name] = NumericStats(min(xs), max(xs), mean, math.sqrt(var), len(xs))
            else:
                numeric[decl.name] = NumericStats(math.nan, math.nan, math.nan, math.nan, 0)
        elif decl.kind is FeatureKind.CATEGORICAL:
            freq: dict[str, int] = {}
            for v in values:
                freq[v.label] = freq.get(v.label, 0) + 1
            categorical[decl.name] = CategoricalStats(dict(sorted(freq.items())))
        else:
            if values:
                latest = max(values, key=lambda t: t.observed_on)
                xs = [v.value for v in values]
                temporal[decl.name] = TemporalStats(latest.observed_on, latest.value,
                                                    min(xs), max(xs), len(xs))
            else:
                temporal[decl.name] = TemporalStats(None, None, math.nan, math.nan, 0)
    return NormalizationStats(numeric, categorical, temporal)


@dataclass(eq=False)
class Dataset:
    """Validated, single-type corpus with its normalization statistics."""

    schema: FeatureSchema
    property_type: PropertyType
    records: list[Property]
    stats: NormalizationStats

    @classmethod
    def build(cls, schema: FeatureSchema, property_type: PropertyType,
              records: Sequence[Property]) -> "Dataset":
        for p in records:
            if p.property_type is not property_type:
                raise ValueError(f"record {p.id}: type {p.property_type.value}, "
                                 f"dataset is {property_type.value}")
            if p.unit_price is None:
                raise ValueError(f"record {p.id}: unit_price is required in a dataset")
            violations = validate_property(schema, p)
            if violations:
                raise ValueError(f"record {p.id}: {'; '.join(violations)}")
        return cls(schema, property_type, list(records), compute_stats(schema, records))

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class RejectedRow:
    row_number: int
    reason: str


# ---------------------------------------------------------------------------
# CSV in/out


def _encode_cell(v: FeatureValue) -> str:
    if is_missing(v):
        return ""
    if isinstance(v, Numeric):
        return repr(v.value)
    if isinstance(v, Categorical):
        return v.label
    return f"{v.observed_on.isoformat()}:{repr(v.value)}"


def _decode_cell(decl: FeatureDecl, cell: str) -> FeatureValue:
    if cell == "":
        return MISSING
    if decl.kind is FeatureKind.NUMERIC:
        return Numeric(float(cell))
    if decl.kind is FeatureKind.CATEGORICAL:
        return Categorical(cell)
    day, _, value = cell.partition(":")
    if not value:
        raise ValueError(f"temporal cell {cell!r} is not 'YYYY-MM-DD:value'")
    return Temporal(date.fromisoformat(day), float(value))


def save_csv(dataset: Dataset, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = dataset.schema.names()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(BASE_COLUMNS) + list(names))
        for p in dataset.records:
            row = [p.id, p.property_type.value, p.address,
                   p.transaction_date.isoformat() if p.transaction_date else "",
                   repr(p.unit_price)]
            row.extend(_encode_cell(p.feature(n)) for n in names)
            writer.writerow(row)


def load_csv(path: Path | str, schema: FeatureSchema,
             ) -> tuple[dict[PropertyType, Dataset], list[RejectedRow]]:
    """Partition a CSV corpus into one dataset per property type.

    Invalid rows land in the rejects report instead of being silently
    dropped; a header missing a required column is a hard error.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, no header row") from None
        missing_cols = [c for c in REQUIRED_COLUMNS if c not in header]
        missing_cols += [n for n in schema.names() if n not in header]
        if missing_cols:
            raise ValueError(f"{path}: header is missing columns {missing_cols}")
        col = {name: header.index(name) for name in header}

        by_type: dict[PropertyType, list[Property]] = {t: [] for t in PropertyType}
        rejects: list[RejectedRow] = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                record = _parse_row(schema, col, row)
            except (ValueError, IndexError) as exc:
                rejects.append(RejectedRow(row_number, str(exc)))
                continue
            violations = validate_property(schema, record)
            if record.unit_price is None:
                violations.append("unit_price: required for corpus records")
            if violations:
                rejects.append(RejectedRow(row_number, "; ".join(violations)))
                continue
            by_type[record.property_type].append(record)

    datasets = {t: Dataset.build(schema, t, records)
                for t, records in by_type.items() if records}
    return datasets, rejects


def _parse_row(schema: FeatureSchema, col: Mapping[str, int], row: Sequence[str]) -> Property:
    ptype = PropertyType.from_label(row[col["type"]])
    features = {d.name: _decode_cell(d, row[col[d.name]]) for d in schema}
    address = row[col["address"]] if "address" in col else ""
    raw_date = row[col["transaction_date"]] if "transaction_date" in col else ""
    raw_price = row[col["unit_price"]]
    return Property(
        id=row[col["id"]],
        property_type=ptype,
        address=address,
        transaction_date=date.fromisoformat(raw_date) if raw_date else None,
        features=features,
        unit_price=float(raw_price) if raw_price != "" else None,
    )


# ---------------------------------------------------------------------------
# Persisted artifact layout: datasets/<type>.csv, stats/<type>.stats,
# models/<type>.model.  Stats and models embed the schema hash; loading under
# a different schema is a hard error.


def dataset_path(root: Path | str, ptype: PropertyType) -> Path:
    return Path(root) / "datasets" / f"{ptype.value.lower()}.csv"


def stats_path(root: Path | str, ptype: PropertyType) -> Path:
    return Path(root) / "stats" / f"{ptype.value.lower()}.stats"


def model_path(root: Path | str, ptype: PropertyType) -> Path:
    return Path(root) / "models" / f"{ptype.value.lower()}.model"


def _nan_to_none(x: float) -> float | None:
    return None if isinstance(x, float) and math.isnan(x) else x


def _none_to_nan(x) -> float:
    return math.nan if x is None else float(x)


def stats_to_json(stats: NormalizationStats, schema: FeatureSchema) -> dict:
    return {
        "version": STATS_FORMAT_VERSION,
        "schema_hash": schema.hash(),
        "numeric": {
            name: {"min": _nan_to_none(s.minimum), "max": _nan_to_none(s.maximum),
                   "mean": _nan_to_none(s.mean), "std": _nan_to_none(s.std), "count": s.count}
            for name, s in stats.numeric.items()},
        "categorical": {name: {"frequencies": dict(s.frequencies)}
                        for name, s in stats.categorical.items()},
        "temporal": {
            name: {"latest_date": s.latest_date.isoformat() if s.latest_date else None,
                   "latest_value": s.latest_value,
                   "min": _nan_to_none(s.minimum), "max": _nan_to_none(s.maximum),
                   "count": s.count}
            for name, s in stats.temporal.items()},
    }


def stats_from_json(payload: Mapping, schema: FeatureSchema) -> NormalizationStats:
    if payload.get("version") != STATS_FORMAT_VERSION:
        raise ValueError(f"unsupported stats format version {payload.get('version')!r}")
    if payload.get("schema_hash") != schema.hash():
        raise SchemaMismatchError("stats file was computed under a different schema")
    numeric = {name: NumericStats(_none_to_nan(s["min"]), _none_to_nan(s["max"]),
                                  _none_to_nan(s["mean"]), _none_to_nan(s["std"]), s["count"])
               for name, s in payload["numeric"].items()}
    categorical = {name: CategoricalStats(dict(s["frequencies"]))
                   for name, s in payload["categorical"].items()}
    temporal = {name: TemporalStats(
                    date.fromisoformat(s["latest_date"]) if s["latest_date"] else None,
                    s["latest_value"], _none_to_nan(s["min"]), _none_to_nan(s["max"]), s["count"])
                for name, s in payload["temporal"].items()}
    return NormalizationStats(numeric, categorical, temporal)


def save_stats(stats: NormalizationStats, schema: FeatureSchema, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(stats_to_json(stats, schema), indent=1, sort_keys=True))


def load_stats(path: Path | str, schema: FeatureSchema) -> NormalizationStats:
    return stats_from_json(json.loads(Path(path).read_text()), schema)


def save_corpus(datasets: Mapping[PropertyType, Dataset], root: Path | str) -> None:
    """Write datasets and their stats under the standard layout."""
    for ptype, ds in datasets.items():
        save_csv(ds, dataset_path(root, ptype))
        save_stats(ds.stats, ds.schema, stats_path(root, ptype))


def load_corpus(root: Path | str, schema: FeatureSchema,
                types: Iterable[PropertyType] = tuple(PropertyType),
                ) -> dict[PropertyType, Dataset]:
    """Read datasets (and persisted stats) for every type present under root."""
    out: dict[PropertyType, Dataset] = {}
    for ptype in types:
        csv_file = dataset_path(root, ptype)
        if not csv_file.exists():
            continue
        datasets, rejects = load_csv(csv_file, schema)
        if rejects:
            raise ValueError(f"{csv_file}: {len(rejects)} invalid rows, "
                             f"first: row {rejects[0].row_number}: {rejects[0].reason}")
        if ptype not in datasets:
            continue
        ds = datasets[ptype]
        stats_file = stats_path(root, ptype)
        if stats_file.exists():
            ds = Dataset(schema, ptype, ds.records, load_stats(stats_file, schema))
        out[ptype] = ds
    return out

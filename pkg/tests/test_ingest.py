import datetime

import pytest

from propval.domain import (
    DEFAULT_SCHEMA,
    MISSING,
    Categorical,
    Numeric,
    Property,
    PropertyType,
    SchemaMismatchError,
    Temporal,
)
from propval.ingest import (
    Dataset,
    compute_stats,
    load_csv,
    load_stats,
    save_csv,
    save_stats,
)

from test_domain import make_property


def record(i, ptype=PropertyType.APARTMENT, price=30.0, **features):
    base = make_property(**features)
    return Property(id=f"r{i:03d}", property_type=ptype, address=base.address,
                    transaction_date=base.transaction_date,
                    features=base.features, unit_price=price)


class TestComputeStats:
    def test_numeric_min_max_mean(self):
        records = [record(i, house_age=Numeric(v)) for i, v in enumerate([10.0, 20.0, 30.0])]
        stats = compute_stats(DEFAULT_SCHEMA, records)
        age = stats.numeric["house_age"]
        assert (age.minimum, age.maximum, age.mean, age.count) == (10.0, 30.0, 20.0, 3)

    def test_label_frequencies(self):
        labels = ["a", "a", "b"]
        records = [record(i, land_use_designation=Categorical(lbl))
                   for i, lbl in enumerate(labels)]
        stats = compute_stats(DEFAULT_SCHEMA, records)
        assert dict(stats.categorical["land_use_designation"].frequencies) == {"a": 2, "b": 1}
        assert stats.categorical["land_use_designation"].modal_label() == "a"

    def test_all_missing_feature_flagged(self):
        records = [record(i, parking_areas=MISSING) for i in range(3)]
        stats = compute_stats(DEFAULT_SCHEMA, records)
        assert stats.numeric["parking_areas"].count == 0
        assert "parking_areas" in stats.unobserved_features()

    def test_temporal_latest_and_range(self):
        records = [
            record(0, announced_land_value=Temporal(datetime.date(2021, 1, 1), 5.0)),
            record(1, announced_land_value=Temporal(datetime.date(2023, 6, 1), 7.0)),
        ]
        stats = compute_stats(DEFAULT_SCHEMA, records)
        t = stats.temporal["announced_land_value"]
        assert (t.latest_date, t.latest_value) == (datetime.date(2023, 6, 1), 7.0)
        assert (t.minimum, t.maximum, t.count) == (5.0, 7.0, 2)

    def test_permutation_invariant_exactly(self, apartment_ds):
        forward = compute_stats(DEFAULT_SCHEMA, apartment_ds.records)
        backward = compute_stats(DEFAULT_SCHEMA, list(reversed(apartment_ds.records)))
        assert forward == backward


class TestCsvRoundTrip:
    def test_round_trip_record_for_record(self, apartment_ds, tmp_path):
        path = tmp_path / "apartments.csv"
        save_csv(apartment_ds, path)
        datasets, rejects = load_csv(path, DEFAULT_SCHEMA)
        assert rejects == []
        assert datasets[PropertyType.APARTMENT].records == apartment_ds.records

    def test_partition_by_type(self, tmp_path):
        rows = [record(0, PropertyType.BUILDING), record(1, PropertyType.APARTMENT),
                record(2, PropertyType.HOUSE)]
        merged = []
        for r in rows:
            part = tmp_path / f"{r.id}.csv"
            save_csv(Dataset.build(DEFAULT_SCHEMA, r.property_type, [r]), part)
            lines = part.read_text().splitlines()
            if not merged:
                merged.append(lines[0])
            merged.extend(lines[1:])
        path = tmp_path / "mixed.csv"
        path.write_text("\n".join(merged) + "\n")
        datasets, rejects = load_csv(path, DEFAULT_SCHEMA)
        assert rejects == []
        assert {t: len(d.records) for t, d in datasets.items()} == {
            PropertyType.BUILDING: 1, PropertyType.APARTMENT: 1, PropertyType.HOUSE: 1}

    def test_empty_cell_becomes_missing(self, tmp_path):
        path = tmp_path / "d.csv"
        ds = Dataset.build(DEFAULT_SCHEMA, PropertyType.APARTMENT,
                           [record(0, house_age=MISSING)])
        save_csv(ds, path)
        datasets, rejects = load_csv(path, DEFAULT_SCHEMA)
        assert rejects == []
        loaded = datasets[PropertyType.APARTMENT].records[0]
        assert loaded.feature("house_age") is MISSING

    def test_zero_unit_price_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        save_csv(Dataset.build(DEFAULT_SCHEMA, PropertyType.APARTMENT, [record(0)]), path)
        lines = path.read_text().splitlines()
        lines.append(lines[1].replace("r000", "r001").replace(",30.0,", ",0.0,"))
        path.write_text("\n".join(lines) + "\n")
        datasets, rejects = load_csv(path, DEFAULT_SCHEMA)
        assert len(rejects) == 1 and rejects[0].row_number == 3
        assert "unit_price" in rejects[0].reason
        assert len(datasets[PropertyType.APARTMENT].records) == 1

    def test_unparsable_cell_rejected_not_fatal(self, tmp_path):
        path = tmp_path / "d.csv"
        save_csv(Dataset.build(DEFAULT_SCHEMA, PropertyType.APARTMENT, [record(0)]), path)
        lines = path.read_text().splitlines()
        lines.append(lines[1].replace("r000", "r001").replace("12.0", "twelve"))
        path.write_text("\n".join(lines) + "\n")
        datasets, rejects = load_csv(path, DEFAULT_SCHEMA)
        assert len(rejects) == 1
        assert len(datasets[PropertyType.APARTMENT].records) == 1

    def test_missing_header_column_is_hard_error(self, tmp_path):
        path = tmp_path / "d.csv"
        save_csv(Dataset.build(DEFAULT_SCHEMA, PropertyType.APARTMENT, [record(0)]), path)
        lines = path.read_text().splitlines()
        lines[0] = lines[0].replace("unit_price", "price")
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="unit_price"):
            load_csv(path, DEFAULT_SCHEMA)


class TestDatasetBuild:
    def test_rejects_mixed_types(self):
        with pytest.raises(ValueError, match="type"):
            Dataset.build(DEFAULT_SCHEMA, PropertyType.HOUSE, [record(0)])

    def test_rejects_unknown_price(self):
        p = record(0, price=None)
        with pytest.raises(ValueError, match="unit_price"):
            Dataset.build(DEFAULT_SCHEMA, PropertyType.APARTMENT, [p])

    def test_stats_cover_all_numeric_features(self, apartment_ds):
        for name in DEFAULT_SCHEMA.numeric_names():
            assert name in apartment_ds.stats.numeric


class TestStatsPersistence:
    def test_round_trip(self, apartment_ds, tmp_path):
        path = tmp_path / "a.stats"
        save_stats(apartment_ds.stats, DEFAULT_SCHEMA, path)
        assert load_stats(path, DEFAULT_SCHEMA) == apartment_ds.stats

    def test_schema_mismatch_is_hard_error(self, apartment_ds, tmp_path):
        from propval.domain import FeatureDecl, FeatureKind, FeatureSchema
        path = tmp_path / "a.stats"
        save_stats(apartment_ds.stats, DEFAULT_SCHEMA, path)
        other = FeatureSchema((FeatureDecl("x", FeatureKind.NUMERIC),))
        with pytest.raises(SchemaMismatchError):
            load_stats(path, other)

import math

import numpy as np
import pytest

from propval.domain import (
    DEFAULT_SCHEMA,
    MISSING,
    Categorical,
    LabelConstraint,
    Numeric,
    PropertyConfiguration,
    RangeConstraint,
    is_missing,
)
from propval.neighbors import (
    _batch_distances,
    feature_vector,
    filter_candidates,
    find_neighbors,
    minkowski_distance,
    normalize_value,
)


class TestNormalization:
    def test_linear_scaling(self):
        assert normalize_value(15.0, 10.0, 20.0) == 0.5

    def test_out_of_range_clamps(self):
        assert normalize_value(-3.0, 0.0, 10.0) == 0.0
        assert normalize_value(25.0, 0.0, 10.0) == 1.0

    def test_degenerate_range(self):
        assert normalize_value(5.0, 5.0, 5.0) == 0.5
        assert normalize_value(7.0, 5.0, 5.0) == 1.0

    def test_feature_vector_shape_and_missing(self, apartment_ds):
        p = apartment_ds.records[0].with_features({"house_age": MISSING})
        vec = feature_vector(p, DEFAULT_SCHEMA, apartment_ds.stats)
        assert vec.shape == (len(DEFAULT_SCHEMA.numeric_names()),)
        age_idx = DEFAULT_SCHEMA.numeric_names().index("house_age")
        assert math.isnan(vec[age_idx])
        observed = vec[~np.isnan(vec)]
        assert np.all((observed >= 0) & (observed <= 1))


class TestMinkowskiDistance:
    def test_three_four_five(self):
        d = minkowski_distance(np.array([0.0, 0.0]), np.array([0.3, 0.4]))
        assert abs(d - 0.5) < 1e-12

    def test_identity(self):
        x = np.array([0.2, 0.9, 0.5])
        assert minkowski_distance(x, x) == 0.0

    def test_jointly_observed_rescaling(self):
        x = np.array([0.5, np.nan])
        y = np.array([0.2, 0.7])
        assert abs(minkowski_distance(x, y) - 0.4242640687119285) < 1e-12

    def test_no_joint_observation_is_nan(self):
        assert math.isnan(minkowski_distance(np.array([np.nan, 0.3]),
                                             np.array([0.1, np.nan])))

    def test_exponent_parameter(self):
        x = np.array([0.0, 0.0])
        y = np.array([0.3, 0.4])
        assert abs(minkowski_distance(x, y, p=1.0) - 0.7) < 1e-12

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            minkowski_distance(np.array([0.1]), np.array([0.1, 0.2]))

    def test_metric_properties_random(self):
        rng = np.random.default_rng(123)
        for _ in range(2000):
            x, y, z = rng.uniform(0, 1, (3, 5))
            dxy = minkowski_distance(x, y)
            assert dxy >= 0
            assert abs(dxy - minkowski_distance(y, x)) < 1e-9
            assert minkowski_distance(x, x) < 1e-9
            assert dxy <= minkowski_distance(x, z) + minkowski_distance(z, y) + 1e-9

    def test_batch_matches_scalar_bitwise(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(0, 1, (500, 6))
        X[rng.uniform(size=X.shape) < 0.3] = np.nan
        t = rng.uniform(0, 1, 6)
        batch = _batch_distances(X, t, 2.0)
        scalar = np.array([minkowski_distance(row, t) for row in X])
        assert np.array_equal(np.isnan(batch), np.isnan(scalar))
        keep = ~np.isnan(batch)
        assert np.array_equal(batch[keep], scalar[keep])


def _oracle_match(p, config):
    for name, constraint in config.constraints.items():
        v = p.feature(name)
        if is_missing(v):
            return False
        if isinstance(constraint, RangeConstraint):
            if constraint.lower is not None and v.value < constraint.lower:
                return False
            if constraint.upper is not None and v.value > constraint.upper:
                return False
        else:
            if v.label not in constraint.allowed:
                return False
    return True


def oracle_neighbors(target, config, dataset, k):
    """Exhaustive filter-sort reference, independent of the production scan."""
    scored = []
    t = feature_vector(target, dataset.schema, dataset.stats)
    for p in dataset.records:
        if p.id == target.id or not _oracle_match(p, config):
            continue
        d = minkowski_distance(t, feature_vector(p, dataset.schema, dataset.stats))
        if not math.isnan(d):
            scored.append((d, p.id))
    scored.sort()
    return [pid for _, pid in scored[:k]]


class TestFilterCandidates:
    def test_blank_configuration_keeps_everything(self, apartment_ds):
        out = filter_candidates(PropertyConfiguration(), apartment_ds)
        assert len(out) == len(apartment_ds.records)

    def test_range_excludes(self, apartment_ds):
        config = PropertyConfiguration(constraints={
            "house_age": RangeConstraint(0.0, 10.0)})
        for p in filter_candidates(config, apartment_ds):
            assert 0.0 <= p.feature("house_age").value <= 10.0

    def test_missing_under_constraint_excluded(self, apartment_ds):
        masked = apartment_ds.records[0].with_features({"house_age": MISSING})
        config = PropertyConfiguration(constraints={
            "house_age": RangeConstraint(0.0, 100.0)})
        assert not _oracle_match(masked, config)
        ds_records = [masked] + apartment_ds.records[1:]
        from propval.ingest import Dataset
        ds = Dataset.build(DEFAULT_SCHEMA, apartment_ds.property_type, ds_records)
        survivors = {p.id for p in filter_candidates(config, ds)}
        assert masked.id not in survivors

    def test_label_constraint(self, apartment_ds):
        config = PropertyConfiguration(constraints={
            "land_use_designation": LabelConstraint(frozenset({"commercial"}))})
        out = filter_candidates(config, apartment_ds)
        assert out and all(p.feature("land_use_designation").label == "commercial"
                           for p in out)

    def test_matches_oracle_filter(self, apartment_ds):
        config = PropertyConfiguration(constraints={
            "house_age": RangeConstraint(5.0, 30.0),
            "land_use_designation": LabelConstraint(frozenset({"residential_a",
                                                               "residential_b"})),
        })
        got = {p.id for p in filter_candidates(config, apartment_ds)}
        expected = {p.id for p in apartment_ds.records if _oracle_match(p, config)}
        assert got == expected

    def test_widening_a_range_never_drops_candidates(self, apartment_ds):
        narrow = PropertyConfiguration(constraints={
            "house_age": RangeConstraint(10.0, 20.0)})
        wide = PropertyConfiguration(constraints={
            "house_age": RangeConstraint(5.0, 30.0)})
        narrow_ids = {p.id for p in filter_candidates(narrow, apartment_ds)}
        wide_ids = {p.id for p in filter_candidates(wide, apartment_ds)}
        assert narrow_ids <= wide_ids


def _random_config(rng, dataset):
    constraints = {}
    if rng.uniform() < 0.7:
        stats = dataset.stats.numeric["house_age"]
        lo = float(rng.uniform(stats.minimum, stats.mean))
        hi = float(rng.uniform(stats.mean, stats.maximum))
        lower = lo if rng.uniform() < 0.8 else None
        upper = hi if rng.uniform() < 0.8 else None
        constraints["house_age"] = RangeConstraint(lower, upper)
    if rng.uniform() < 0.4:
        stats = dataset.stats.numeric["total_floors"]
        constraints["total_floors"] = RangeConstraint(
            None, float(rng.uniform(stats.minimum, stats.maximum)))
    if rng.uniform() < 0.4:
        labels = list(dataset.stats.categorical["land_use_designation"].frequencies)
        size = int(rng.integers(1, len(labels) + 1))
        chosen = rng.choice(labels, size=size, replace=False)
        constraints["land_use_designation"] = LabelConstraint(frozenset(chosen))
    return PropertyConfiguration(k=int(rng.integers(1, 11)), constraints=constraints)


def _random_target(rng, dataset):
    base = dataset.records[int(rng.integers(0, len(dataset.records)))]
    updates = {}
    for name in dataset.schema.names():
        roll = rng.uniform()
        if roll < 0.25:
            updates[name] = MISSING
        elif roll < 0.5 and name in dataset.stats.numeric:
            st = dataset.stats.numeric[name]
            updates[name] = Numeric(float(rng.uniform(st.minimum, st.maximum)))
    import dataclasses
    return dataclasses.replace(base.with_features(updates), id="probe")


class TestFindNeighbors:
    def test_exact_duplicate_is_rank_one_at_zero(self, apartment_ds):
        import dataclasses
        dup = dataclasses.replace(apartment_ds.records[7], id="dup")
        result = find_neighbors(dup, PropertyConfiguration(k=1), apartment_ds)
        assert result.neighbors[0].neighbor.id == apartment_ds.records[7].id
        assert result.neighbors[0].distance == 0.0
        assert result.neighbors[0].rank == 1

    def test_excludes_own_id(self, apartment_ds):
        target = apartment_ds.records[0]
        result = find_neighbors(target, PropertyConfiguration(k=5), apartment_ds)
        assert target.id not in [r.neighbor.id for r in result.neighbors]

    def test_ranks_contiguous_and_sorted(self, apartment_ds):
        result = find_neighbors(apartment_ds.records[3], PropertyConfiguration(k=8),
                                apartment_ds)
        assert [r.rank for r in result.neighbors] == list(range(1, 9))
        distances = [r.distance for r in result.neighbors]
        assert distances == sorted(distances)

    def test_scarce_candidates_return_fewer(self, apartment_ds):
        config = PropertyConfiguration(k=50, constraints={
            "house_age": RangeConstraint(0.0, 1.0)})
        result = find_neighbors(apartment_ds.records[0], config, apartment_ds)
        assert len(result.neighbors) <= result.candidate_count < 50
        assert result.status == "ok"

    def test_no_candidates_has_explicit_status(self, apartment_ds):
        config = PropertyConfiguration(k=3, constraints={
            "house_age": RangeConstraint(-10.0, -5.0)})
        result = find_neighbors(apartment_ds.records[0], config, apartment_ds)
        assert result.neighbors == ()
        assert result.status == "no_candidates"

    def test_deterministic(self, apartment_ds):
        target = apartment_ds.records[10]
        a = find_neighbors(target, PropertyConfiguration(k=6), apartment_ds)
        b = find_neighbors(target, PropertyConfiguration(k=6), apartment_ds)
        assert [(r.neighbor.id, r.distance) for r in a.neighbors] \
            == [(r.neighbor.id, r.distance) for r in b.neighbors]

    def test_distance_ties_break_by_id(self, apartment_ds):
        import dataclasses
        base = apartment_ds.records[0]
        twin_b = dataclasses.replace(base, id="tie-b")
        twin_a = dataclasses.replace(base, id="tie-a")
        from propval.ingest import Dataset
        ds = Dataset.build(DEFAULT_SCHEMA, base.property_type,
                           apartment_ds.records + [twin_b, twin_a])
        probe = dataclasses.replace(base, id="probe")
        result = find_neighbors(probe, PropertyConfiguration(k=3), ds)
        zero_ids = [r.neighbor.id for r in result.neighbors if r.distance == 0.0]
        assert zero_ids == sorted(zero_ids)
        assert set(zero_ids) == {base.id, "tie-a", "tie-b"}

    def test_matches_bruteforce_oracle(self, apartment_ds):
        rng = np.random.default_rng(2024)
        for _ in range(60):
            config = _random_config(rng, apartment_ds)
            target = _random_target(rng, apartment_ds)
            got = [r.neighbor.id for r in
                   find_neighbors(target, config, apartment_ds).neighbors]
            assert got == oracle_neighbors(target, config, apartment_ds, config.k)

    def test_incomparable_pairs_never_returned(self, apartment_ds):
        import dataclasses
        target = dataclasses.replace(
            apartment_ds.records[0].with_features(
                {n: MISSING for n in DEFAULT_SCHEMA.numeric_names()}),
            id="blank")
        result = find_neighbors(target, PropertyConfiguration(k=4), apartment_ds)
        assert result.neighbors == ()
        assert result.candidate_count == len(apartment_ds.records)

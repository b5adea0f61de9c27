"""Core vocabulary shared by the whole valuation engine.

Properties, feature schemas, feature values (with first-class missing),
and the user-set search configuration, plus their canonical JSON encoding.
Everything here is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterator, Mapping


class PropertyType(Enum):
    BUILDING = "Building"
    APARTMENT = "Apartment"
    HOUSE = "House"

    @classmethod
    def from_label(cls, label: str) -> "PropertyType":
        for member in cls:
            if member.value == label:
                return member
        raise ValueError(f"unknown property type {label!r}")


class FeatureKind(Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TEMPORAL = "temporal"


class _MissingType:
    """Singleton marker for an absent feature value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __bool__(self):
        return False


MISSING = _MissingType()


@dataclass(frozen=True)
class Numeric:
    value: float


@dataclass(frozen=True)
class Categorical:
    label: str


@dataclass(frozen=True)
class Temporal:
    """A time-stamped observation, e.g. the announced land value on a date."""

    observed_on: datetime.date
    value: float


FeatureValue = Numeric | Categorical | Temporal | _MissingType

_KIND_FOR_VALUE = {Numeric: FeatureKind.NUMERIC,
                   Categorical: FeatureKind.CATEGORICAL,
                   Temporal: FeatureKind.TEMPORAL}


def is_missing(v: FeatureValue) -> bool:
    return v is MISSING or isinstance(v, _MissingType)


@dataclass(frozen=True)
class FeatureDecl:
    name: str
    kind: FeatureKind
    units: str = ""
    required_by_avm: bool = False


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature declarations.

    Order is load-bearing: the position of a numeric feature defines its
    index in distance vectors, so two encodings under the same schema always
    agree on what the i-th feature means.
    """

    features: tuple[FeatureDecl, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(names) != len(set(names)):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate feature names in schema: {dupes}")

    def __iter__(self) -> Iterator[FeatureDecl]:
        return iter(self.features)

    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def numeric_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features if f.kind is FeatureKind.NUMERIC)

    def decl(self, name: str) -> FeatureDecl:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(f.name == name for f in self.features)

    def hash(self) -> str:
        """Content hash used to detect feature-order drift in persisted artifacts."""
        payload = [[f.name, f.kind.value, f.units, f.required_by_avm] for f in self.features]
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class SchemaMismatchError(Exception):
    """A persisted artifact was produced under a different feature schema."""


#: Default feature set. The coordinates are ordinary numeric features so the
#: neighbor distance can use them directly; a property's map location is
#: derived from them.
DEFAULT_SCHEMA = FeatureSchema((
    FeatureDecl("latitude", FeatureKind.NUMERIC, "degrees", required_by_avm=True),
    FeatureDecl("longitude", FeatureKind.NUMERIC, "degrees", required_by_avm=True),
    FeatureDecl("house_age", FeatureKind.NUMERIC, "years", required_by_avm=True),
    FeatureDecl("total_floors", FeatureKind.NUMERIC, "floors", required_by_avm=True),
    FeatureDecl("building_area", FeatureKind.NUMERIC, "square meters", required_by_avm=True),
    FeatureDecl("parking_areas", FeatureKind.NUMERIC, "square meters"),
    FeatureDecl("land_use_designation", FeatureKind.CATEGORICAL, "", required_by_avm=True),
    FeatureDecl("announced_land_value", FeatureKind.TEMPORAL,
                "thousand NTD per square meter", required_by_avm=True),
))

UNIT_PRICE_UNITS = "thousand NTD per square meter"


@dataclass(frozen=True)
class Property:
    """One real-estate record. ``unit_price`` is in thousand NTD per square meter."""

    id: str
    property_type: PropertyType
    address: str = ""
    transaction_date: datetime.date | None = None
    features: Mapping[str, FeatureValue] = field(default_factory=dict)
    unit_price: float | None = None

    def feature(self, name: str) -> FeatureValue:
        return self.features.get(name, MISSING)

    @property
    def location(self) -> tuple[float, float] | None:
        """(latitude, longitude) when both coordinate features are observed."""
        lat = self.features.get("latitude", MISSING)
        lon = self.features.get("longitude", MISSING)
        if isinstance(lat, Numeric) and isinstance(lon, Numeric):
            return (lat.value, lon.value)
        return None

    def with_features(self, updates: Mapping[str, FeatureValue]) -> "Property":
        merged = dict(self.features)
        merged.update(updates)
        return replace(self, features=merged)

    def missing_features(self, schema: FeatureSchema) -> tuple[str, ...]:
        return tuple(d.name for d in schema if is_missing(self.feature(d.name)))


@dataclass(frozen=True)
class RangeConstraint:
    """Inclusive [lower, upper] acceptance range; either bound may be open."""

    lower: float | None = None
    upper: float | None = None

    def contains(self, value: float) -> bool:
        if self.lower is not None and value < self.lower:
            return False
        if self.upper is not None and value > self.upper:
            return False
        return True


@dataclass(frozen=True)
class LabelConstraint:
    """Set of acceptable categorical labels."""

    allowed: frozenset[str]

    def contains(self, label: str) -> bool:
        return label in self.allowed


Constraint = RangeConstraint | LabelConstraint


@dataclass(frozen=True)
class PropertyConfiguration:
    """Per-feature acceptance conditions plus the neighbor count k.

    An absent constraint means the feature never excludes a candidate, so an
    entirely blank configuration accepts the whole corpus.
    """

    k: int = 6
    constraints: Mapping[str, Constraint] = field(default_factory=dict)

    def constraint(self, name: str) -> Constraint | None:
        return self.constraints.get(name)


DEFAULT_K = 6


# ---------------------------------------------------------------------------
# Validation


def validate_property(schema: FeatureSchema, p: Property) -> list[str]:
    """Check a property against the schema; returns violations, empty when ok."""
    violations = []
    if not isinstance(p.property_type, PropertyType):
        violations.append("property_type: not a recognized property type")
    for name, value in p.features.items():
        if name not in schema:
            violations.append(f"features.{name}: not declared in schema")
            continue
        if is_missing(value):
            continue
        expected = schema.decl(name).kind
        actual = _KIND_FOR_VALUE.get(type(value))
        if actual is None:
            violations.append(f"features.{name}: unrecognized value type {type(value).__name__}")
        elif actual is not expected:
            violations.append(f"features.{name}: {actual.value} value for {expected.value} feature")
    if p.unit_price is not None and not p.unit_price > 0:
        violations.append("unit_price: must be strictly positive")
    lat = p.features.get("latitude")
    if isinstance(lat, Numeric) and not -90.0 <= lat.value <= 90.0:
        violations.append("features.latitude: outside [-90, 90]")
    lon = p.features.get("longitude")
    if isinstance(lon, Numeric) and not -180.0 <= lon.value <= 180.0:
        violations.append("features.longitude: outside [-180, 180]")
    return violations


def validate_configuration(schema: FeatureSchema, config: PropertyConfiguration) -> list[str]:
    """Check a configuration against the schema; returns violations, empty when ok."""
    violations = []
    if config.k < 1:
        violations.append("k: must be >= 1")
    for name, constraint in config.constraints.items():
        if name not in schema:
            violations.append(f"constraints.{name}: not declared in schema")
            continue
        kind = schema.decl(name).kind
        if isinstance(constraint, RangeConstraint):
            if kind is not FeatureKind.NUMERIC:
                violations.append(f"constraints.{name}: range constraint on {kind.value} feature")
            if (constraint.lower is not None and constraint.upper is not None
                    and constraint.lower > constraint.upper):
                violations.append(f"constraints.{name}: lower bound exceeds upper bound")
        elif isinstance(constraint, LabelConstraint):
            if kind is not FeatureKind.CATEGORICAL:
                violations.append(f"constraints.{name}: label constraint on {kind.value} feature")
        else:
            violations.append(f"constraints.{name}: unrecognized constraint type")
    return violations


# ---------------------------------------------------------------------------
# Canonical JSON encoding.  Missing is encoded as null; feature values appear
# under their feature names.  This encoding is also what goes into LLM prompts.


def feature_value_to_json(v: FeatureValue) -> Any:
    if is_missing(v):
        return None
    if isinstance(v, Numeric):
        return v.value
    if isinstance(v, Categorical):
        return v.label
    if isinstance(v, Temporal):
        return {"date": v.observed_on.isoformat(), "value": v.value}
    raise TypeError(f"not a feature value: {v!r}")


def feature_value_from_json(decl: FeatureDecl, raw: Any) -> FeatureValue:
    if raw is None:
        return MISSING
    if decl.kind is FeatureKind.NUMERIC:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ValueError(f"{decl.name}: expected a number, got {raw!r}")
        return Numeric(float(raw))
    if decl.kind is FeatureKind.CATEGORICAL:
        if not isinstance(raw, str):
            raise ValueError(f"{decl.name}: expected a label string, got {raw!r}")
        return Categorical(raw)
    if decl.kind is FeatureKind.TEMPORAL:
        if not isinstance(raw, Mapping) or "date" not in raw or "value" not in raw:
            raise ValueError(f"{decl.name}: expected {{date, value}}, got {raw!r}")
        if isinstance(raw["value"], bool) or not isinstance(raw["value"], (int, float)):
            raise ValueError(f"{decl.name}: expected a numeric value, got {raw['value']!r}")
        return Temporal(datetime.date.fromisoformat(raw["date"]), float(raw["value"]))
    raise ValueError(f"{decl.name}: unknown feature kind {decl.kind}")


def property_to_json(p: Property) -> dict:
    return {
        "id": p.id,
        "property_type": p.property_type.value,
        "address": p.address,
        "transaction_date": p.transaction_date.isoformat() if p.transaction_date else None,
        "features": {name: feature_value_to_json(v) for name, v in p.features.items()},
        "unit_price": p.unit_price,
    }


def property_from_json(schema: FeatureSchema, d: Mapping) -> Property:
    features = {}
    for name, raw in d.get("features", {}).items():
        if name not in schema:
            raise ValueError(f"features.{name}: not declared in schema")
        features[name] = feature_value_from_json(schema.decl(name), raw)
    raw_date = d.get("transaction_date")
    unit_price = d.get("unit_price")
    return Property(
        id=str(d["id"]),
        property_type=PropertyType.from_label(d["property_type"]),
        address=d.get("address", "") or "",
        transaction_date=datetime.date.fromisoformat(raw_date) if raw_date else None,
        features=features,
        unit_price=float(unit_price) if unit_price is not None else None,
    )


def configuration_to_json(config: PropertyConfiguration) -> dict:
    constraints: dict[str, Any] = {}
    for name, c in config.constraints.items():
        if isinstance(c, RangeConstraint):
            constraints[name] = {"lower": c.lower, "upper": c.upper}
        else:
            constraints[name] = {"allowed": sorted(c.allowed)}
    return {"k": config.k, "constraints": constraints}


def configuration_from_json(d: Mapping) -> PropertyConfiguration:
    constraints: dict[str, Constraint] = {}
    for name, raw in (d.get("constraints") or {}).items():
        if "allowed" in raw:
            constraints[name] = LabelConstraint(frozenset(raw["allowed"]))
        else:
            lower, upper = raw.get("lower"), raw.get("upper")
            constraints[name] = RangeConstraint(
                float(lower) if lower is not None else None,
                float(upper) if upper is not None else None,
            )
    return PropertyConfiguration(k=int(d.get("k", DEFAULT_K)), constraints=constraints)


def canonical_json(payload: Any, indent: int | None = None) -> str:
    """Deterministic JSON text: sorted keys, stable float formatting."""
    if indent is None:
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return json.dumps(payload, sort_keys=True, indent=indent)

"""Synthetic property corpus with controllable spatial structure.

Records are drawn around a handful of Taiwanese city clusters. A smooth
latent field over coordinates ("local desirability") drives floors, areas,
land-use mix, announced land value, and a direct location premium; the
``spatial_correlation`` knob in [0, 1] interpolates each driver between that
field and an independent random draw. At 0 the price is statistically
independent of location; near 1 nearby properties share both features and
prices, which is what makes neighbor-based imputation informative.

The unit price is a known log-linear function of the features plus noise,
with a negative house-age coefficient.
"""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from .domain import (
    DEFAULT_SCHEMA,
    Categorical,
    FeatureSchema,
    Numeric,
    Property,
    PropertyType,
    Temporal,
)
from .ingest import Dataset

SYNTH_DEFAULT_SIZE = 5000

# (name, latitude, longitude, urbanity, jitter sd in degrees)
_CITIES = (
    ("Taipei", 25.04, 121.56, 1.00, 0.045),
    ("New Taipei", 25.01, 121.46, 0.90, 0.060),
    ("Hsinchu", 24.80, 120.97, 0.75, 0.050),
    ("Taichung", 24.14, 120.68, 0.80, 0.070),
    ("Tainan", 22.99, 120.21, 0.70, 0.070),
    ("Kaohsiung", 22.63, 120.30, 0.78, 0.070),
    ("Nantou", 23.91, 120.66, 0.25, 0.150),
    ("Taitung", 22.75, 121.15, 0.15, 0.180),
)

_CITY_WEIGHTS = {
    PropertyType.BUILDING: (0.30, 0.20, 0.12, 0.15, 0.08, 0.12, 0.02, 0.01),
    PropertyType.APARTMENT: (0.24, 0.20, 0.12, 0.15, 0.10, 0.13, 0.04, 0.02),
    PropertyType.HOUSE: (0.08, 0.10, 0.08, 0.14, 0.14, 0.14, 0.18, 0.14),
}

_TYPE_INDEX = {PropertyType.BUILDING: 0, PropertyType.APARTMENT: 1, PropertyType.HOUSE: 2}
_ID_PREFIX = {PropertyType.BUILDING: "B", PropertyType.APARTMENT: "A", PropertyType.HOUSE: "H"}

# price model: log(unit_price) = log(base) + sum of feature terms + noise
_BASE_PRICE = {PropertyType.BUILDING: 55.0, PropertyType.APARTMENT: 42.0,
               PropertyType.HOUSE: 28.0}
_BASE_AREA = {PropertyType.BUILDING: 85.0, PropertyType.APARTMENT: 95.0,
              PropertyType.HOUSE: 140.0}
_MAX_FLOORS = {PropertyType.BUILDING: 28.0, PropertyType.APARTMENT: 13.0,
               PropertyType.HOUSE: 4.0}

AGE_COEFFICIENT = -0.55          # on age/45, so oldest lose ~42% of price
_FLOORS_COEFFICIENT = 0.45
_AREA_COEFFICIENT = 0.25         # on log(area / base_area)
_PARKING_COEFFICIENT = 0.08      # on parking_areas / 40
_LAND_VALUE_COEFFICIENT = 0.40   # on log(value / 12)
_LOCATION_PREMIUM = 0.15         # direct field term, scaled by spatial_correlation
_NOISE_SD = 0.06

_LAND_USE_OFFSETS = {
    "agricultural": -0.30,
    "industrial": -0.15,
    "residential_b": 0.00,
    "residential_a": 0.08,
    "commercial": 0.22,
}

_ROADS = ("Minsheng", "Zhongshan", "Heping", "Renai", "Fuxing", "Guangming",
          "Wenhua", "Chenggong", "Dongmen", "Jianguo")


def desirability_field(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    """Smooth latent field in [0, 1]: Gaussian city bumps plus a mild gradient."""
    psi = np.zeros_like(np.asarray(lat, dtype=float))
    for _, clat, clon, urbanity, spread in _CITIES:
        radius = max(0.06, spread)
        d2 = (lat - clat) ** 2 + (lon - clon) ** 2
        psi = psi + urbanity * np.exp(-d2 / (2.0 * radius**2))
    psi = psi + 0.10 * (lat - 21.8) / 3.6
    return np.clip(psi / 1.15, 0.0, 1.0)


def _mix(s: float, psi: np.ndarray, independent: np.ndarray) -> np.ndarray:
    """Interpolate a feature driver between the spatial field and noise."""
    return s * psi + (1.0 - s) * independent


def synth_generate(seed: int, size: int, spatial_correlation: float,
                   property_type: PropertyType = PropertyType.APARTMENT,
                   schema: FeatureSchema = DEFAULT_SCHEMA) -> Dataset:
    """Generate one deterministic single-type dataset."""
    if size < 1:
        raise ValueError("size must be >= 1")
    if not 0.0 <= spatial_correlation <= 1.0:
        raise ValueError("spatial_correlation must lie in [0, 1]")
    s = float(spatial_correlation)
    rng = np.random.default_rng([int(seed), _TYPE_INDEX[property_type]])
    n = int(size)

    city_idx = rng.choice(len(_CITIES), size=n, p=_CITY_WEIGHTS[property_type])
    spreads = np.array([c[4] for c in _CITIES])[city_idx]
    lat = np.array([c[1] for c in _CITIES])[city_idx] + rng.normal(0.0, 1.0, n) * spreads
    lon = np.array([c[2] for c in _CITIES])[city_idx] + rng.normal(0.0, 1.0, n) * spreads
    psi = desirability_field(lat, lon)

    house_age = rng.uniform(0.0, 45.0, n)

    floors_driver = _mix(s, psi, rng.uniform(0.0, 1.0, n))
    max_floors = _MAX_FLOORS[property_type]
    total_floors = np.maximum(1.0, np.round(
        1.0 + (max_floors - 1.0) * floors_driver + rng.normal(0.0, 0.8, n)))

    area_driver = _mix(s, psi, rng.uniform(0.0, 1.0, n))
    base_area = _BASE_AREA[property_type]
    building_area = base_area * (1.45 - 0.75 * area_driver) * np.exp(rng.normal(0.0, 0.35, n))

    parking_driver = _mix(s, psi, rng.uniform(0.0, 1.0, n))
    has_parking = rng.uniform(0.0, 1.0, n) < 0.7
    parking_areas = np.where(has_parking, 8.0 + 32.0 * parking_driver
                             + rng.normal(0.0, 2.0, n).clip(-6.0, 6.0), 0.0)
    parking_areas = np.maximum(parking_areas, 0.0)

    land_use_driver = _mix(s, psi, rng.uniform(0.0, 1.0, n))
    land_use_noise = rng.normal(0.0, 0.08, n)
    labels = list(_LAND_USE_OFFSETS)
    land_use_q = np.clip(land_use_driver + land_use_noise, 0.0, 1.0)
    land_use_idx = np.digitize(land_use_q, [0.20, 0.40, 0.65, 0.85])

    land_value_driver = _mix(s, psi, rng.uniform(0.0, 1.0, n))
    announced_value = 12.0 * np.exp(1.1 * land_value_driver + rng.normal(0.0, 0.10, n))
    value_day = rng.integers(0, 5 * 365, n)
    transaction_day = rng.integers(0, 6 * 365, n)

    log_price = (np.log(_BASE_PRICE[property_type])
                 + AGE_COEFFICIENT * (house_age / 45.0)
                 + _FLOORS_COEFFICIENT * (total_floors / max_floors)
                 + _AREA_COEFFICIENT * np.log(building_area / base_area)
                 + _PARKING_COEFFICIENT * (parking_areas / 40.0)
                 + np.array([_LAND_USE_OFFSETS[labels[i]] for i in land_use_idx])
                 + _LAND_VALUE_COEFFICIENT * np.log(announced_value / 12.0)
                 + s * _LOCATION_PREMIUM * (psi - 0.5)
                 + rng.normal(0.0, _NOISE_SD, n))
    unit_price = np.exp(log_price)

    road_idx = rng.integers(0, len(_ROADS), n)
    street_no = rng.integers(1, 300, n)

    value_epoch = date(2020, 1, 1)
    txn_epoch = date(2019, 1, 1)
    prefix = _ID_PREFIX[property_type]
    records = []
    for i in range(n):
        city_name = _CITIES[city_idx[i]][0]
        features = {
            "latitude": Numeric(float(lat[i])),
            "longitude": Numeric(float(lon[i])),
            "house_age": Numeric(float(np.round(house_age[i], 1))),
            "total_floors": Numeric(float(total_floors[i])),
            "building_area": Numeric(float(np.round(building_area[i], 1))),
            "parking_areas": Numeric(float(np.round(parking_areas[i], 1))),
            "land_use_designation": Categorical(labels[land_use_idx[i]]),
            "announced_land_value": Temporal(
                value_epoch + timedelta(days=int(value_day[i])),
                float(np.round(announced_value[i], 2))),
        }
        records.append(Property(
            id=f"{prefix}-{i:05d}",
            property_type=property_type,
            address=f"{street_no[i]} {_ROADS[road_idx[i]]} Rd., {city_name}",
            transaction_date=txn_epoch + timedelta(days=int(transaction_day[i])),
            features=features,
            unit_price=float(np.round(unit_price[i], 3)),
        ))
    return Dataset.build(schema, property_type, records)


def synth_corpus(seed: int, size: int, spatial_correlation: float,
                 schema: FeatureSchema = DEFAULT_SCHEMA) -> dict[PropertyType, Dataset]:
    """One dataset per property type, each from its own derived seed."""
    return {ptype: synth_generate(seed, size, spatial_correlation, ptype, schema)
            for ptype in PropertyType}

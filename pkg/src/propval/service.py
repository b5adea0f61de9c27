"""HTTP JSON API orchestrating the valuation pipeline.

Per request: geocode -> validate -> neighbor search -> neighbor imputation
-> price prediction -> pairwise comparison and explanation. Artifacts load
at startup into an immutable snapshot shared read-only by request handlers;
the reload endpoint swaps in a fresh snapshot atomically, so in-flight
requests keep the one they started with. Every degraded stage leaves a
status note in the report rather than failing the request.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .domain import (
    DEFAULT_K,
    DEFAULT_SCHEMA,
    FeatureSchema,
    Numeric,
    Property,
    PropertyConfiguration,
    PropertyType,
    configuration_from_json,
    feature_value_from_json,
    feature_value_to_json,
    property_to_json,
    validate_configuration,
    validate_property,
)
from .explain import LlmClient, StaticLlmClient, HttpLlmClient, generate_explanation
from .gbdt import GbdtModel, load_model, predict
from .geocode import DEFAULT_BBOX, Geocoder, NullGeocoder, StubGeocoder
from .imputation import ImputationReport, impute_neighbor
from .ingest import Dataset, load_corpus, model_path
from .neighbors import NeighborSearchResult, find_neighbors

logger = logging.getLogger(__name__)


class ValuationError(Exception):
    """Request-level failure with an HTTP-ish status class."""

    def __init__(self, status_code: int, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.message = message


@dataclass(frozen=True)
class TypeArtifacts:
    dataset: Dataset
    model: GbdtModel


@dataclass(frozen=True)
class Snapshot:
    """Immutable view of everything the serving path needs."""

    schema: FeatureSchema
    by_type: Mapping[PropertyType, TypeArtifacts]
    default_k: int = DEFAULT_K


def load_snapshot(data_dir: Path | str, schema: FeatureSchema = DEFAULT_SCHEMA,
                  default_k: int = DEFAULT_K) -> Snapshot:
    datasets = load_corpus(data_dir, schema)
    by_type = {}
    for ptype, dataset in datasets.items():
        mpath = model_path(data_dir, ptype)
        if not mpath.exists():
            logger.warning("no model for %s at %s; type not served", ptype.value, mpath)
            continue
        by_type[ptype] = TypeArtifacts(dataset, load_model(mpath, schema))
    return Snapshot(schema, by_type, default_k)


@dataclass(frozen=True)
class ValuationRequest:
    property_type: PropertyType
    address: str
    features: Mapping[str, Any]              # raw JSON feature values
    configuration: PropertyConfiguration
    want_explanation: bool = True
    want_llm: bool = False


def parse_valuation_request(schema: FeatureSchema, payload: Mapping,
                            default_k: int = DEFAULT_K) -> ValuationRequest:
    if "property_type" not in payload:
        raise ValuationError(400, "property_type is required")
    try:
        ptype = PropertyType.from_label(payload["property_type"])
    except ValueError as exc:
        raise ValuationError(400, str(exc)) from None
    raw_config = payload.get("configuration") or {}
    raw_config.setdefault("k", default_k)
    try:
        config = configuration_from_json(raw_config)
    except (ValueError, TypeError, KeyError) as exc:
        raise ValuationError(400, f"bad configuration: {exc}") from None
    config_violations = validate_configuration(schema, config)
    if config_violations:
        raise ValuationError(400, "; ".join(config_violations))
    return ValuationRequest(
        property_type=ptype,
        address=str(payload.get("address", "") or ""),
        features=payload.get("features") or {},
        configuration=config,
        want_explanation=bool(payload.get("want_explanation", True)),
        want_llm=bool(payload.get("want_llm", False)),
    )


@dataclass(frozen=True)
class ValuationReport:
    """Everything the result screen shows, with imputation provenance."""

    property_type: PropertyType
    predicted_unit_price: float
    target: Property                      # post-imputation
    target_location: tuple[float, float] | None
    imputation: ImputationReport
    search: NeighborSearchResult
    comparisons: tuple[tuple[str, tuple], ...]
    annotations: tuple[str, ...]
    explanation_text: str
    explanation_renderer: str
    status_notes: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "property_type": self.property_type.value,
            "predicted_unit_price": self.predicted_unit_price,
            "unit_price_units": "thousand NTD per square meter",
            "target": property_to_json(self.target),
            "target_location": list(self.target_location) if self.target_location else None,
            "imputation": [{
                "feature": e.feature,
                "value": feature_value_to_json(e.value),
                "strategy": e.strategy,
                "source": list(e.source),
                "support": e.support,
                "fallback": e.fallback,
            } for e in self.imputation.entries],
            "unresolved_features": list(self.imputation.unresolved),
            "neighbors": [{
                "id": r.neighbor.id,
                "rank": r.rank,
                "distance": r.distance,
                "location": list(r.neighbor.location) if r.neighbor.location else None,
                "address": r.neighbor.address,
                "unit_price": r.neighbor.unit_price,
                "transaction_date": (r.neighbor.transaction_date.isoformat()
                                     if r.neighbor.transaction_date else None),
                "features": {n: feature_value_to_json(v)
                             for n, v in r.neighbor.features.items()},
            } for r in self.search.neighbors],
            "candidate_count": self.search.candidate_count,
            "comparisons": {nid: [c.to_json() for c in comps]
                            for nid, comps in self.comparisons},
            "annotations": list(self.annotations),
            "explanation": {"text": self.explanation_text,
                            "renderer": self.explanation_renderer},
            "status_notes": list(self.status_notes),
        }


def handle_valuation(snapshot: Snapshot, request: ValuationRequest,
                     geocoder: Geocoder | None = None,
                     llm: LlmClient | None = None,
                     llm_timeout_s: float = 10.0,
                     audit_path: Path | str | None = None) -> ValuationReport:
    if request.property_type not in snapshot.by_type:
        raise ValuationError(503, f"no model loaded for {request.property_type.value}")
    artifacts = snapshot.by_type[request.property_type]
    schema, dataset = snapshot.schema, artifacts.dataset
    notes: list[str] = []

    features = {}
    for name, raw in request.features.items():
        if name not in schema:
            raise ValuationError(400, f"features.{name}: not declared in schema")
        try:
            features[name] = feature_value_from_json(schema.decl(name), raw)
        except ValueError as exc:
            raise ValuationError(400, str(exc)) from None
    target = Property(id="(request)", property_type=request.property_type,
                      address=request.address, features=features)

    if target.location is None and geocoder is not None:
        resolved = None
        try:
            resolved = geocoder.resolve(request.address)
        except Exception as exc:   # any backend failure degrades, never aborts
            logger.warning("geocoder failed for %r: %s", request.address, exc)
        if resolved is not None:
            target = target.with_features({"latitude": Numeric(resolved[0]),
                                           "longitude": Numeric(resolved[1])})
        else:
            notes.append("geocoding unresolved; neighbor search runs without coordinates")

    violations = validate_property(schema, target)
    if violations:
        raise ValuationError(400, "; ".join(violations))
    # the map shows only coordinates the user gave or the geocoder resolved;
    # neighbor-imputed ones still feed the model but are not a real location
    known_location = target.location

    search = find_neighbors(target, request.configuration, dataset)
    if search.status == "no_candidates":
        notes.append("no neighbors matched configuration; imputation fell back "
                     "to corpus averages")
    elif len(search.neighbors) < request.configuration.k:
        notes.append(f"only {len(search.neighbors)} of {request.configuration.k} "
                     "requested neighbors matched the configuration")

    completed, imputation = impute_neighbor(target, search.properties(),
                                            schema, dataset.stats)
    if imputation.unresolved:
        notes.append("features with no observations anywhere stayed missing: "
                     + ", ".join(imputation.unresolved))

    prediction = predict(artifacts.model, completed)

    comparisons: tuple = ()
    annotations: tuple = ()
    text, renderer = "", "template"
    if request.want_explanation:
        bundle = generate_explanation(
            completed, search.neighbors, prediction, schema, dataset.stats,
            llm=llm if request.want_llm else None,
            timeout_s=llm_timeout_s, audit_path=audit_path)
        comparisons, annotations = bundle.comparisons, bundle.annotations
        text, renderer = bundle.text, bundle.renderer

    return ValuationReport(
        property_type=request.property_type,
        predicted_unit_price=prediction,
        target=completed,
        target_location=known_location,
        imputation=imputation,
        search=search,
        comparisons=comparisons,
        annotations=annotations,
        explanation_text=text,
        explanation_renderer=renderer,
        status_notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Configuration and FastAPI wiring


@dataclass
class ServiceConfig:
    data_dir: Path = Path("data")
    host: str = "127.0.0.1"
    port: int = 8000
    default_k: int = DEFAULT_K
    geocoder: str = "stub"                  # stub | none
    geocode_bbox: tuple[float, float, float, float] = DEFAULT_BBOX
    llm: str = "none"                       # none | static | http
    llm_endpoint: str = ""
    llm_static_text: str = ""
    llm_auth_env: str = "PROPVAL_LLM_TOKEN"
    llm_timeout_s: float = 10.0
    audit_log: Path | None = None
    frontend_dir: Path | None = None

    @classmethod
    def from_file(cls, path: Path | str) -> "ServiceConfig":
        raw = json.loads(Path(path).read_text())
        cfg = cls()
        for key, value in raw.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key {key!r}")
            if key in ("data_dir", "audit_log", "frontend_dir"):
                value = Path(value) if value is not None else None
            if key == "geocode_bbox":
                value = tuple(value)
            setattr(cfg, key, value)
        return cfg

    def build_geocoder(self) -> Geocoder:
        if self.geocoder == "none":
            return NullGeocoder()
        return StubGeocoder(self.geocode_bbox)

    def build_llm(self) -> LlmClient | None:
        if self.llm == "http" and self.llm_endpoint:
            return HttpLlmClient(self.llm_endpoint, self.llm_auth_env)
        if self.llm == "static":
            return StaticLlmClient(self.llm_static_text or "explanation unavailable")
        return None


class SnapshotHolder:
    """Atomic reference: handlers read it once per request."""

    def __init__(self, snapshot: Snapshot):
        self._snapshot = snapshot

    def get(self) -> Snapshot:
        return self._snapshot

    def swap(self, snapshot: Snapshot) -> None:
        self._snapshot = snapshot


def create_app(config: ServiceConfig, snapshot: Snapshot | None = None):
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse

    if snapshot is None:
        snapshot = load_snapshot(config.data_dir, default_k=config.default_k)
    holder = SnapshotHolder(snapshot)
    geocoder = config.build_geocoder()
    llm = config.build_llm()

    app = FastAPI(title="propval", version="0.1.0")
    app.state.holder = holder

    @app.get("/api/v1/health")
    def health():
        snap = holder.get()
        return {"status": "ok",
                "types_loaded": sorted(t.value for t in snap.by_type)}

    @app.get("/api/v1/schema/{type_label}")
    def schema(type_label: str):
        snap = holder.get()
        try:
            ptype = PropertyType.from_label(type_label)
        except ValueError:
            raise HTTPException(status_code=404, detail=f"unknown type {type_label!r}")
        return {
            "property_type": ptype.value,
            "property_types": [t.value for t in PropertyType],
            "default_k": snap.default_k,
            "unit_price_units": "thousand NTD per square meter",
            "features": [{"name": f.name, "kind": f.kind.value, "units": f.units,
                          "required_by_avm": f.required_by_avm}
                         for f in snap.schema],
        }

    @app.post("/api/v1/valuations")
    def valuations(payload: dict):
        snap = holder.get()
        try:
            request = parse_valuation_request(snap.schema, payload, snap.default_k)
            report = handle_valuation(snap, request, geocoder, llm,
                                      config.llm_timeout_s, config.audit_log)
        except ValuationError as exc:
            return JSONResponse(status_code=exc.status_code,
                                content={"detail": exc.message})
        return report.to_json()

    @app.post("/api/v1/reload")
    def reload():
        fresh = load_snapshot(config.data_dir, default_k=config.default_k)
        holder.swap(fresh)
        return {"status": "reloaded",
                "types_loaded": sorted(t.value for t in fresh.by_type)}

    if config.frontend_dir and Path(config.frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=config.frontend_dir, html=True),
                  name="frontend")

    return app

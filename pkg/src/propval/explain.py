"""Feature-wise explanations of a valuation.

The structural layer compares the (post-imputation) target against each
neighbor feature by feature; the rendering layer turns that into text,
either through a pluggable LLM backend fed JSON-serialized properties, or
through a deterministic template so the system stays fully usable offline.
The comparison data is computed independently of whichever renderer runs.
"""

from __future__ import annotations

import json
import logging
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .domain import (
    UNIT_PRICE_UNITS,
    Categorical,
    FeatureKind,
    FeatureSchema,
    FeatureValue,
    Numeric,
    Property,
    Temporal,
    canonical_json,
    feature_value_to_json,
    is_missing,
    property_to_json,
)
from .ingest import NormalizationStats
from .neighbors import NeighborResult

logger = logging.getLogger(__name__)

HIGHER = "higher"
LOWER = "lower"
EQUAL = "equal"
DIFFERS = "differs"
INCOMPARABLE = "incomparable"

DEFAULT_TOKEN_CAP = 4000


@dataclass(frozen=True)
class PairwiseComparison:
    """One feature, target vs neighbor.

    ``delta`` is neighbor minus target for ordered kinds and None otherwise;
    ``salience`` scales |delta| by the corpus value range into [0, 1] (None
    when the pair is incomparable).
    """

    feature: str
    target_value: FeatureValue
    neighbor_value: FeatureValue
    delta: float | None
    direction: str
    salience: float | None

    def to_json(self) -> dict:
        return {
            "feature": self.feature,
            "target_value": feature_value_to_json(self.target_value),
            "neighbor_value": feature_value_to_json(self.neighbor_value),
            "delta": self.delta,
            "direction": self.direction,
            "salience": self.salience,
        }


@dataclass(frozen=True)
class ExplanationBundle:
    prediction: float
    comparisons: tuple[tuple[str, tuple[PairwiseComparison, ...]], ...]  # by rank
    annotations: tuple[str, ...]
    text: str
    renderer: str   # "llm" or "template"


def _ordered_comparison(feature: str, tv, nv, delta: float, value_range: float,
                        ) -> PairwiseComparison:
    if delta > 0:
        direction = HIGHER
    elif delta < 0:
        direction = LOWER
    else:
        direction = EQUAL
    if delta == 0:
        salience = 0.0
    elif value_range > 0 and not math.isnan(value_range):
        salience = min(abs(delta) / value_range, 1.0)
    else:
        salience = 1.0
    return PairwiseComparison(feature, tv, nv, delta, direction, salience)


def compare_pairwise(target: Property, neighbor: NeighborResult | Property,
                     schema: FeatureSchema, stats: NormalizationStats,
                     ) -> tuple[PairwiseComparison, ...]:
    """One comparison per schema feature; a side with a missing value makes
    the pair incomparable for that feature."""
    other = neighbor.neighbor if isinstance(neighbor, NeighborResult) else neighbor
    out = []
    for decl in schema:
        tv = target.feature(decl.name)
        nv = other.feature(decl.name)
        if is_missing(tv) or is_missing(nv):
            out.append(PairwiseComparison(decl.name, tv, nv, None, INCOMPARABLE, None))
        elif decl.kind is FeatureKind.NUMERIC:
            st = stats.numeric[decl.name]
            out.append(_ordered_comparison(decl.name, tv, nv, nv.value - tv.value,
                                           st.maximum - st.minimum))
        elif decl.kind is FeatureKind.TEMPORAL:
            st = stats.temporal[decl.name]
            out.append(_ordered_comparison(decl.name, tv, nv, nv.value - tv.value,
                                           st.maximum - st.minimum))
        else:
            same = tv.label == nv.label
            out.append(PairwiseComparison(decl.name, tv, nv, None,
                                          EQUAL if same else DIFFERS,
                                          0.0 if same else 1.0))
    return tuple(out)


@dataclass(frozen=True)
class DomainPrior:
    """An expected feature/price sign relation used for consistency notes."""

    feature: str = "house_age"
    expected_sign: int = -1
    label: str = "house-age/price"


DEFAULT_PRIORS = (DomainPrior(),)


def annotate_consistency(target: Property, prediction: float,
                         neighbors: Sequence[NeighborResult],
                         priors: Sequence[DomainPrior] = DEFAULT_PRIORS) -> tuple[str, ...]:
    notes = []
    for prior in priors:
        tv = target.feature(prior.feature)
        if not isinstance(tv, Numeric):
            continue
        for result in neighbors:
            nb = result.neighbor
            nv = nb.feature(prior.feature)
            if not isinstance(nv, Numeric) or nb.unit_price is None:
                continue
            d_feat = nv.value - tv.value
            d_price = nb.unit_price - prediction
            if d_feat == 0 or d_price == 0:
                continue
            observed = 1 if d_feat * d_price > 0 else -1
            rel = f"{prior.feature} {'higher' if d_feat > 0 else 'lower'} and " \
                  f"price {'higher' if d_price > 0 else 'lower'}"
            if observed == prior.expected_sign:
                notes.append(f"neighbor {nb.id}: {rel} — consistent with the "
                             f"negative {prior.label} prior")
            else:
                notes.append(f"neighbor {nb.id}: {rel} — runs against the "
                             f"negative {prior.label} prior")
    return tuple(notes)


def estimate_tokens(text: str) -> int:
    # coarse 4-characters-per-token budget heuristic
    return (len(text) + 3) // 4


def _prompt_text(target: Property, kept: Sequence[NeighborResult], prediction: float,
                 omitted: int) -> str:
    lines = [
        "You are a real-estate valuation assistant. Explain the predicted unit "
        "price of the target property by comparing it, feature by feature, "
        "against each comparable property listed below.",
        "",
        f"Predicted unit price of the target: {prediction:.3f} {UNIT_PRICE_UNITS}.",
        "",
        "Target property (JSON):",
        canonical_json(property_to_json(target), indent=2),
        "",
        "Comparable properties, nearest first (JSON):",
    ]
    for result in kept:
        lines.append(f"Comparable rank {result.rank}, distance {result.distance:.6f}:")
        lines.append(canonical_json(property_to_json(result.neighbor), indent=2))
    if omitted:
        lines.append(f"(Note: {omitted} farthest comparable(s) omitted to fit "
                     "the length budget.)")
    lines += [
        "",
        "For every feature, state whether the target is higher, lower, or equal "
        "to the comparables and how that difference should move the price. "
        "Finish with a short overall judgement of the predicted price.",
    ]
    return "\n".join(lines)


def build_prompt(target: Property, neighbors: Sequence[NeighborResult], prediction: float,
                 token_cap: int = DEFAULT_TOKEN_CAP) -> str:
    """Deterministic prompt over the canonical JSON encodings.

    Neighbors appear in rank order; when the token estimate exceeds the cap,
    the farthest neighbors are dropped first and the omission is noted in
    the prompt itself.
    """
    if not neighbors:
        raise ValueError("build_prompt needs at least one neighbor")
    ranked = sorted(neighbors, key=lambda r: r.rank)
    for keep in range(len(ranked), 0, -1):
        text = _prompt_text(target, ranked[:keep], prediction, len(ranked) - keep)
        if estimate_tokens(text) <= token_cap or keep == 1:
            return text
    raise AssertionError("unreachable")


def _format_value(v: FeatureValue) -> str:
    if isinstance(v, Numeric):
        return f"{v.value:g}"
    if isinstance(v, Categorical):
        return v.label
    if isinstance(v, Temporal):
        return f"{v.value:g} as of {v.observed_on.isoformat()}"
    return "unknown"


def render_template_explanation(
        prediction: float,
        per_neighbor: Sequence[tuple[str, Sequence[PairwiseComparison]]]) -> str:
    """Offline renderer: one sentence per neighbor over its three most salient
    feature differences, nearest neighbor first."""
    sentences = [f"Estimated unit price: {prediction:.1f} {UNIT_PRICE_UNITS}."]
    if not per_neighbor:
        sentences.append("No neighboring properties matched the configuration, "
                         "so the estimate relies on corpus-level averages.")
    for neighbor_id, comparisons in per_neighbor:
        salient = [c for c in comparisons if c.salience is not None and c.salience > 0]
        salient.sort(key=lambda c: (-c.salience, c.feature))
        if not salient:
            sentences.append(f"Neighbor {neighbor_id} is effectively identical "
                             "on all compared features.")
            continue
        phrases = []
        for c in salient[:3]:
            phrases.append(f"{c.feature} {c.direction} "
                           f"({_format_value(c.neighbor_value)} vs "
                           f"{_format_value(c.target_value)})")
        sentences.append(f"Neighbor {neighbor_id}: " + "; ".join(phrases) + ".")
    return "\n".join(sentences)


class LlmClient(Protocol):
    def complete(self, prompt: str, timeout_s: float) -> str: ...


@dataclass(frozen=True)
class StaticLlmClient:
    """Fixed-response stub for tests and demos."""

    text: str

    def complete(self, prompt: str, timeout_s: float) -> str:
        return self.text


@dataclass(frozen=True)
class HttpLlmClient:
    """Minimal JSON-over-HTTP backend: POST {prompt} -> {text}.

    The auth token is read from the environment, never from request bodies.
    """

    endpoint: str
    auth_env: str = "PROPVAL_LLM_TOKEN"

    def complete(self, prompt: str, timeout_s: float) -> str:
        import os

        import requests

        headers = {}
        token = os.environ.get(self.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        response = requests.post(self.endpoint, json={"prompt": prompt},
                                 headers=headers, timeout=timeout_s)
        response.raise_for_status()
        return response.json()["text"]


def _call_with_deadline(client: LlmClient, prompt: str, timeout_s: float) -> str:
    """Run the blocking client call on a worker thread with a hard deadline."""
    result: dict = {}

    def runner():
        try:
            result["text"] = client.complete(prompt, timeout_s)
        except Exception as exc:  # transport failures fall back, never propagate
            result["error"] = exc

    worker = threading.Thread(target=runner, daemon=True)
    worker.start()
    worker.join(timeout_s)
    if worker.is_alive():
        raise TimeoutError(f"LLM call exceeded {timeout_s:.3f}s")
    if "error" in result:
        raise RuntimeError(f"LLM call failed: {result['error']}")
    return result.get("text", "")


def generate_explanation(target: Property, neighbors: Sequence[NeighborResult],
                         prediction: float, schema: FeatureSchema,
                         stats: NormalizationStats,
                         llm: LlmClient | None = None,
                         timeout_s: float = 10.0,
                         token_cap: int = DEFAULT_TOKEN_CAP,
                         audit_path: Path | str | None = None,
                         priors: Sequence[DomainPrior] = DEFAULT_PRIORS,
                         ) -> ExplanationBundle:
    """Comparisons plus rendered text; the LLM path degrades silently to the
    template renderer on timeout or transport failure."""
    ranked = sorted(neighbors, key=lambda r: r.rank)
    comparisons = tuple((r.neighbor.id, compare_pairwise(target, r, schema, stats))
                        for r in ranked)
    annotations = annotate_consistency(target, prediction, ranked, priors)

    text = None
    renderer = "template"
    prompt = build_prompt(target, ranked, prediction, token_cap) if ranked else None
    if llm is not None and prompt is not None:
        started = time.monotonic()
        try:
            candidate = _call_with_deadline(llm, prompt, timeout_s)
            if candidate and candidate.strip():
                text, renderer = candidate, "llm"
            else:
                logger.warning("LLM returned an empty explanation; using template")
        except (TimeoutError, RuntimeError) as exc:
            logger.warning("%s after %.3fs; using template renderer",
                           exc, time.monotonic() - started)
    if text is None:
        text = render_template_explanation(prediction, comparisons)

    if audit_path is not None:
        entry = {"renderer": renderer, "prompt": prompt, "response": text}
        with open(audit_path, "a") as fh:
            fh.write(json.dumps(entry) + "\n")

    return ExplanationBundle(prediction, comparisons, annotations, text, renderer)

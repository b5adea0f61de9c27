/** Draft state for the configuration screen and its local validation.
 *
 * The draft stores raw input strings so the form round-trips exactly what
 * the user typed; everything may be left blank. Validation only rejects
 * values that cannot be sent (bad numbers, inverted ranges) — a fully blank
 * draft is always valid and submits an unconstrained request.
 */

import type {
  ConfigurationPayload,
  FeatureValue,
  SchemaResponse,
  ValuationRequestPayload,
} from "./types.js";

export interface RangeDraft {
  lower: string;
  upper: string;
}

export interface Draft {
  propertyType: string;
  address: string;
  /** Raw detail inputs per feature: numeric/temporal-value as text. */
  details: Record<string, string>;
  /** Temporal observation dates (ISO), keyed by feature. */
  detailDates: Record<string, string>;
  /** Per numeric feature acceptance range. */
  ranges: Record<string, RangeDraft>;
  /** Per categorical feature: comma-separated allowed labels. */
  labels: Record<string, string>;
  k: string;
  wantLlm: boolean;
}

export function emptyDraft(propertyType: string, defaultK: number): Draft {
  return {
    propertyType,
    address: "",
    details: {},
    detailDates: {},
    ranges: {},
    labels: {},
    k: String(defaultK),
    wantLlm: false,
  };
}

const isBlank = (s: string | undefined): boolean => !s || s.trim() === "";

const asNumber = (s: string): number | null => {
  const v = Number(s.trim());
  return Number.isFinite(v) ? v : null;
};

/** Field-keyed error messages; an empty object means the draft can submit. */
export function validateDraft(draft: Draft, schema: SchemaResponse): Record<string, string> {
  const errors: Record<string, string> = {};

  if (!isBlank(draft.k)) {
    const k = asNumber(draft.k);
    if (k === null || !Number.isInteger(k) || k < 1) {
      errors["k"] = "neighbor count must be a whole number of at least 1";
    }
  }

  for (const decl of schema.features) {
    const detail = draft.details[decl.name];
    if (!isBlank(detail) && asNumber(detail!) === null && decl.kind !== "categorical") {
      errors[`detail.${decl.name}`] = "must be a number";
    }
    if (decl.kind !== "numeric") continue;

    const range = draft.ranges[decl.name];
    if (!range) continue;
    const lower = isBlank(range.lower) ? null : asNumber(range.lower);
    const upper = isBlank(range.upper) ? null : asNumber(range.upper);
    if (!isBlank(range.lower) && lower === null) {
      errors[`range.${decl.name}`] = "lower bound must be a number";
    } else if (!isBlank(range.upper) && upper === null) {
      errors[`range.${decl.name}`] = "upper bound must be a number";
    } else if (lower !== null && upper !== null && lower > upper) {
      errors[`range.${decl.name}`] = "lower bound exceeds upper bound";
    }
  }
  return errors;
}

/** Build the wire payload; call only after validateDraft returned no errors. */
export function draftToPayload(draft: Draft, schema: SchemaResponse): ValuationRequestPayload {
  const features: Record<string, FeatureValue> = {};
  for (const decl of schema.features) {
    const raw = draft.details[decl.name];
    if (isBlank(raw)) continue;
    if (decl.kind === "categorical") {
      features[decl.name] = raw!.trim();
    } else if (decl.kind === "temporal") {
      const date = draft.detailDates[decl.name];
      features[decl.name] = {
        date: isBlank(date) ? new Date().toISOString().slice(0, 10) : date!.trim(),
        value: asNumber(raw!)!,
      };
    } else {
      features[decl.name] = asNumber(raw!)!;
    }
  }

  const configuration: ConfigurationPayload = {
    k: isBlank(draft.k) ? schema.default_k : asNumber(draft.k)!,
    constraints: {},
  };
  for (const decl of schema.features) {
    if (decl.kind === "numeric") {
      const range = draft.ranges[decl.name];
      if (!range || (isBlank(range.lower) && isBlank(range.upper))) continue;
      configuration.constraints[decl.name] = {
        lower: isBlank(range.lower) ? null : asNumber(range.lower),
        upper: isBlank(range.upper) ? null : asNumber(range.upper),
      };
    } else if (decl.kind === "categorical") {
      const raw = draft.labels[decl.name];
      if (isBlank(raw)) continue;
      const allowed = raw!.split(",").map((s) => s.trim()).filter((s) => s !== "");
      if (allowed.length > 0) {
        configuration.constraints[decl.name] = { allowed };
      }
    }
  }

  return {
    property_type: draft.propertyType,
    address: draft.address.trim(),
    features,
    configuration,
    want_explanation: true,
    want_llm: draft.wantLlm,
  };
}

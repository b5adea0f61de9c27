/** Wire formats of the valuation service (the API is the only contract). */

export type FeatureKind = "numeric" | "categorical" | "temporal";

export interface FeatureDecl {
  name: string;
  kind: FeatureKind;
  units: string;
  required_by_avm: boolean;
}

export interface SchemaResponse {
  property_type: string;
  property_types: string[];
  default_k: number;
  unit_price_units: string;
  features: FeatureDecl[];
}

export interface RangeConstraintPayload {
  lower?: number | null;
  upper?: number | null;
}

export interface LabelConstraintPayload {
  allowed: string[];
}

export interface ConfigurationPayload {
  k: number;
  constraints: Record<string, RangeConstraintPayload | LabelConstraintPayload>;
}

/** Feature values use the canonical encoding: null means missing. */
export type FeatureValue =
  | number
  | string
  | { date: string; value: number }
  | null;

export interface ValuationRequestPayload {
  property_type: string;
  address: string;
  features: Record<string, FeatureValue>;
  configuration: ConfigurationPayload;
  want_explanation: boolean;
  want_llm: boolean;
}

export interface ImputationEntry {
  feature: string;
  value: FeatureValue;
  strategy: string;
  source: string[];
  support: number;
  fallback: boolean;
}

export interface NeighborView {
  id: string;
  rank: number;
  distance: number;
  location: [number, number] | null;
  address: string;
  unit_price: number | null;
  transaction_date: string | null;
  features: Record<string, FeatureValue>;
}

export interface ComparisonEntry {
  feature: string;
  target_value: FeatureValue;
  neighbor_value: FeatureValue;
  delta: number | null;
  direction: "higher" | "lower" | "equal" | "differs" | "incomparable";
  salience: number | null;
}

export interface ValuationReport {
  property_type: string;
  predicted_unit_price: number;
  unit_price_units: string;
  target: {
    id: string;
    property_type: string;
    address: string;
    transaction_date: string | null;
    features: Record<string, FeatureValue>;
    unit_price: number | null;
  };
  target_location: [number, number] | null;
  imputation: ImputationEntry[];
  unresolved_features: string[];
  neighbors: NeighborView[];
  candidate_count: number;
  comparisons: Record<string, ComparisonEntry[]>;
  annotations: string[];
  explanation: { text: string; renderer: "llm" | "template" };
  status_notes: string[];
}

import type {
  ImputationEntry,
  NeighborView,
  SchemaResponse,
  ValuationReport,
} from "../src/types.js";

export const SCHEMA: SchemaResponse = {
  property_type: "Apartment",
  property_types: ["Building", "Apartment", "House"],
  default_k: 6,
  unit_price_units: "thousand NTD per square meter",
  features: [
    { name: "latitude", kind: "numeric", units: "degrees", required_by_avm: true },
    { name: "longitude", kind: "numeric", units: "degrees", required_by_avm: true },
    { name: "house_age", kind: "numeric", units: "years", required_by_avm: true },
    { name: "total_floors", kind: "numeric", units: "floors", required_by_avm: true },
    { name: "land_use_designation", kind: "categorical", units: "", required_by_avm: true },
    { name: "announced_land_value", kind: "temporal",
      units: "thousand NTD per square meter", required_by_avm: true },
  ],
};

function neighbor(i: number): NeighborView {
  return {
    id: `A-${String(i).padStart(5, "0")}`,
    rank: i + 1,
    distance: 0.05 * (i + 1),
    location: [25.0 + i * 0.01, 121.5 + i * 0.01],
    address: `${i + 1} Fixture Rd., Taipei`,
    unit_price: 28.0 + i,
    transaction_date: "2023-04-01",
    features: { house_age: 10 + i, total_floors: 7 },
  };
}

export function makeReport(
  neighborCount: number,
  options: { locationResolved?: boolean; imputed?: string[] } = {},
): ValuationReport {
  const { locationResolved = true, imputed = ["total_floors"] } = options;
  const neighbors = Array.from({ length: neighborCount }, (_, i) => neighbor(i));
  const imputation: ImputationEntry[] = imputed.map((feature) => ({
    feature,
    value: 7,
    strategy: "neighbor",
    source: neighbors.slice(0, 2).map((n) => n.id),
    support: Math.min(2, Math.max(neighborCount, 1)),
    fallback: neighborCount === 0,
  }));
  const comparisons: ValuationReport["comparisons"] = {};
  for (const nb of neighbors) {
    comparisons[nb.id] = [
      { feature: "house_age", target_value: 10, neighbor_value: 10 + nb.rank,
        delta: nb.rank, direction: "higher", salience: 0.1 * nb.rank },
      { feature: "land_use_designation", target_value: "residential_a",
        neighbor_value: "commercial", delta: null, direction: "differs", salience: 1 },
    ];
  }
  return {
    property_type: "Apartment",
    predicted_unit_price: 30.4,
    unit_price_units: "thousand NTD per square meter",
    target: {
      id: "(request)", property_type: "Apartment", address: "9 Example Rd.",
      transaction_date: null,
      features: {
        latitude: 25.02, longitude: 121.52, house_age: 10,
        total_floors: 7, land_use_designation: "residential_a",
        announced_land_value: { date: "2023-01-01", value: 21.0 },
      },
      unit_price: null,
    },
    target_location: locationResolved ? [25.02, 121.52] : null,
    imputation,
    unresolved_features: [],
    neighbors,
    candidate_count: Math.max(neighborCount, 0),
    comparisons,
    annotations: neighborCount > 0
      ? ["neighbor A-00000: house_age higher and price lower — consistent with "
         + "the negative house-age/price prior"]
      : [],
    explanation: { text: "Estimated unit price: 30.4 thousand NTD per square meter.",
                   renderer: "template" },
    status_notes: locationResolved ? [] : ["geocoding unresolved"],
  };
}

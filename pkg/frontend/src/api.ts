import type { SchemaResponse, ValuationReport, ValuationRequestPayload } from "./types.js";

const BASE_URL = "/api/v1";

export async function fetchSchema(propertyType: string): Promise<SchemaResponse> {
  const response = await fetch(`${BASE_URL}/schema/${encodeURIComponent(propertyType)}`);
  if (!response.ok) {
    throw new Error(`schema request failed: ${response.status}`);
  }
  return response.json();
}

export async function submitValuation(
  payload: ValuationRequestPayload,
  signal?: AbortSignal,
): Promise<ValuationReport> {
  const response = await fetch(`${BASE_URL}/valuations`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
    signal,
  });
  if (!response.ok) {
    const body = await response.json().catch(() => ({ detail: response.statusText }));
    throw new Error(body.detail ?? `valuation failed: ${response.status}`);
  }
  return response.json();
}

export async function fetchHealth(): Promise<{ status: string; types_loaded: string[] }> {
  const response = await fetch(`${BASE_URL}/health`);
  return response.json();
}

/** Prediction-result screen.
 *
 * Left: map with the target in red and neighbors in blue. Right: predicted
 * unit price, the imputed features (visually distinguished from user input),
 * the neighbor list with per-neighbor feature comparisons, and the
 * explanation text. Everything shown comes straight from the report; the
 * client never recomputes predictions or distances.
 */

import { MapMarker, TileProvider, renderMap } from "./mapview.js";
import type { ComparisonEntry, FeatureValue, ValuationReport } from "./types.js";

export interface ResultHandlers {
  onBack(): void;
}

const el = <K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] => {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
};

export function formatValue(value: FeatureValue): string {
  if (value === null) return "—";
  if (typeof value === "number") {
    return Number.isInteger(value) ? String(value) : value.toFixed(2);
  }
  if (typeof value === "string") return value;
  return `${value.value} (as of ${value.date})`;
}

const comparisonPhrase = (c: ComparisonEntry): string => {
  if (c.direction === "incomparable") return `${c.feature}: not comparable`;
  if (c.direction === "equal") return `${c.feature}: equal`;
  if (c.direction === "differs") {
    return `${c.feature}: differs (${formatValue(c.neighbor_value)} vs ${formatValue(c.target_value)})`;
  }
  return `${c.feature}: ${c.direction} (${formatValue(c.neighbor_value)} vs ${formatValue(c.target_value)})`;
};

export function renderResultScreen(
  container: HTMLElement,
  report: ValuationReport,
  handlers: ResultHandlers,
  tileProvider?: TileProvider,
): void {
  container.replaceChildren();
  const screen = el("section", "result-screen");

  const back = el("button", "back-to-configuration", "Adjust configuration");
  back.type = "button";
  back.addEventListener("click", () => handlers.onBack());
  screen.append(back);

  for (const note of report.status_notes) {
    screen.append(el("p", "status-note", note));
  }

  const columns = el("div", "result-columns");

  const mapColumn = el("div", "map-column");
  if (report.target_location === null) {
    screen.classList.add("map-hidden");
    mapColumn.append(el("p", "map-notice",
                        "Location could not be resolved; map hidden."));
  } else {
    const markers: MapMarker[] = [
      { id: "target", location: report.target_location, kind: "target" },
    ];
    for (const nb of report.neighbors) {
      if (nb.location) {
        markers.push({ id: nb.id, location: nb.location, kind: "neighbor" });
      }
    }
    const map = el("div", "map-container");
    renderMap(map, markers, tileProvider);
    mapColumn.append(map);
  }
  columns.append(mapColumn);

  const detail = el("div", "detail-column");

  const price = el("div", "prediction");
  price.append(
    el("span", "prediction-value", report.predicted_unit_price.toFixed(1)),
    el("span", "prediction-units", ` ${report.unit_price_units}`),
  );
  detail.append(price);

  const imputedNames = new Set(report.imputation.map((e) => e.feature));
  const featureList = el("ul", "target-features");
  for (const [name, value] of Object.entries(report.target.features)) {
    const item = el("li", imputedNames.has(name) ? "feature imputed" : "feature");
    item.dataset.feature = name;
    item.append(el("span", "feature-name", name),
                el("span", "feature-value", formatValue(value)));
    if (imputedNames.has(name)) {
      const entry = report.imputation.find((e) => e.feature === name)!;
      const origin = entry.strategy === "neighbor"
        ? `imputed from ${entry.support} neighbor${entry.support === 1 ? "" : "s"}`
        : "imputed from corpus averages";
      item.append(el("span", "imputed-tag", origin));
    }
    featureList.append(item);
  }
  detail.append(el("h3", undefined, "Features"), featureList);

  detail.append(el("h3", undefined,
                   `Neighboring properties (${report.neighbors.length})`));
  if (report.neighbors.length === 0) {
    detail.append(el("p", "no-neighbors-notice",
                     "No neighbors matched the configuration; the estimate "
                     + "relies on corpus-level averages."));
  } else {
    const list = el("ol", "neighbor-list");
    for (const nb of report.neighbors) {
      const row = el("li", "neighbor-row");
      row.dataset.id = nb.id;
      const head = el("div", "neighbor-head");
      head.append(
        el("span", "neighbor-id", nb.id),
        el("span", "neighbor-distance", `distance ${nb.distance.toFixed(4)}`),
        el("span", "neighbor-price",
           nb.unit_price === null ? "price unknown"
                                  : `${nb.unit_price.toFixed(1)} ${report.unit_price_units}`),
      );
      row.append(head);
      if (nb.address) row.append(el("div", "neighbor-address", nb.address));
      const comparisons = report.comparisons[nb.id] ?? [];
      const interesting = comparisons.filter((c) => c.direction !== "equal");
      const shown = (interesting.length > 0 ? interesting : comparisons).slice(0, 6);
      const pairwise = el("ul", "pairwise");
      for (const c of shown) {
        const item = el("li", `pairwise-item direction-${c.direction}`,
                        comparisonPhrase(c));
        pairwise.append(item);
      }
      row.append(pairwise);
      list.append(row);
    }
    detail.append(list);
  }

  const explanation = el("div", "explanation");
  explanation.append(
    el("h3", undefined, "Explanation"),
    el("span", "renderer-tag", report.explanation.renderer),
    el("p", "explanation-text", report.explanation.text),
  );
  for (const note of report.annotations) {
    explanation.append(el("p", "annotation", note));
  }
  detail.append(explanation);

  columns.append(detail);
  screen.append(columns);
  container.append(screen);
}

import { beforeEach, describe, expect, it, vi } from "vitest";

import { renderResultScreen } from "../src/results.js";
import { makeReport } from "./fixtures.js";

function render(report = makeReport(6)) {
  const container = document.createElement("div");
  document.body.append(container);
  const handlers = { onBack: vi.fn() };
  renderResultScreen(container, report, handlers);
  return { container, handlers };
}

beforeEach(() => {
  document.body.replaceChildren();
});

describe("result screen", () => {
  it.each([0, 1, 6])("renders %i neighbor markers and rows", (n) => {
    const { container } = render(makeReport(n));
    expect(container.querySelectorAll(".marker-neighbor")).toHaveLength(n);
    expect(container.querySelectorAll(".neighbor-row")).toHaveLength(n);
    expect(container.querySelectorAll(".marker-target")).toHaveLength(1);
  });

  it("shows the prediction with units even without neighbors", () => {
    const { container } = render(makeReport(0));
    expect(container.querySelector(".prediction-value")?.textContent).toBe("30.4");
    expect(container.querySelector(".prediction-units")?.textContent)
      .toContain("thousand NTD per square meter");
    expect(container.querySelector(".no-neighbors-notice")).toBeTruthy();
  });

  it("marks target and neighbors with the fixed colors", () => {
    const { container } = render(makeReport(2));
    expect(container.querySelector(".marker-target")?.getAttribute("fill"))
      .toBe("#d62828");
    expect(container.querySelector(".marker-neighbor")?.getAttribute("fill"))
      .toBe("#1d6fd1");
  });

  it("visually distinguishes imputed features", () => {
    const { container } = render(
      makeReport(3, { imputed: ["total_floors", "announced_land_value"] }));
    const imputed = [...container.querySelectorAll<HTMLElement>(".feature.imputed")]
      .map((node) => node.dataset.feature);
    expect(imputed.sort()).toEqual(["announced_land_value", "total_floors"]);
    const plain = container.querySelector<HTMLElement>(
      '.feature[data-feature="house_age"]');
    expect(plain?.classList.contains("imputed")).toBe(false);
    expect(container.querySelector(".feature.imputed .imputed-tag")?.textContent)
      .toMatch(/imputed from/);
  });

  it("hides the map with a notice when the location is unresolved", () => {
    const { container } = render(makeReport(4, { locationResolved: false }));
    expect(container.querySelector("svg")).toBeNull();
    expect(container.querySelector(".map-notice")?.textContent)
      .toMatch(/map hidden/i);
    expect(container.querySelectorAll(".neighbor-row")).toHaveLength(4);
  });

  it("lists per-neighbor comparisons from the report only", () => {
    const { container } = render(makeReport(2));
    const firstRow = container.querySelector(".neighbor-row")!;
    const phrases = [...firstRow.querySelectorAll(".pairwise-item")]
      .map((node) => node.textContent);
    expect(phrases.some((p) => p?.includes("house_age: higher"))).toBe(true);
    expect(phrases.some((p) => p?.includes("land_use_designation: differs")))
      .toBe(true);
  });

  it("shows the explanation with its renderer tag and annotations", () => {
    const { container } = render(makeReport(3));
    expect(container.querySelector(".renderer-tag")?.textContent).toBe("template");
    expect(container.querySelector(".explanation-text")?.textContent)
      .toContain("Estimated unit price");
    expect(container.querySelector(".annotation")?.textContent)
      .toContain("consistent with the negative house-age/price prior");
  });

  it("surfaces status notes", () => {
    const { container } = render(makeReport(1, { locationResolved: false }));
    expect(container.querySelector(".status-note")?.textContent)
      .toContain("geocoding unresolved");
  });

  it("returns to the configuration screen on demand", () => {
    const { container, handlers } = render();
    container.querySelector<HTMLButtonElement>(".back-to-configuration")!.click();
    expect(handlers.onBack).toHaveBeenCalledTimes(1);
  });
});

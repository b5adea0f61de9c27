import { beforeEach, describe, expect, it, vi } from "vitest";

import { renderConfigurationForm } from "../src/form.js";
import { emptyDraft } from "../src/validate.js";
import { SCHEMA } from "./fixtures.js";

function setup(draft = emptyDraft("Apartment", 6)) {
  const container = document.createElement("div");
  document.body.append(container);
  const handlers = { onSubmit: vi.fn(), onTypeChange: vi.fn() };
  renderConfigurationForm(container, SCHEMA, draft, handlers);
  return { container, draft, handlers };
}

const input = (container: HTMLElement, name: string): HTMLInputElement => {
  const node = container.querySelector<HTMLInputElement>(`[name="${name}"]`);
  if (!node) throw new Error(`no input named ${name}`);
  return node;
};

const type = (node: HTMLInputElement, value: string) => {
  node.value = value;
  node.dispatchEvent(new Event("input", { bubbles: true }));
};

const submit = (container: HTMLElement) => {
  container.querySelector("form")!.dispatchEvent(
    new Event("submit", { bubbles: true, cancelable: true }));
};

beforeEach(() => {
  document.body.replaceChildren();
});

describe("configuration form", () => {
  it("renders one detail input per schema feature", () => {
    const { container } = setup();
    for (const decl of SCHEMA.features) {
      expect(input(container, `detail.${decl.name}`)).toBeTruthy();
    }
    expect(container.querySelector('[name="property_type"]')).toBeTruthy();
  });

  it("submits an all-blank configuration", () => {
    const { container, handlers } = setup();
    submit(container);
    expect(handlers.onSubmit).toHaveBeenCalledTimes(1);
  });

  it("blocks submit on an inverted range and shows an inline message", () => {
    const { container, handlers } = setup();
    type(input(container, "range-lower.house_age"), "10");
    type(input(container, "range-upper.house_age"), "5");
    submit(container);
    expect(handlers.onSubmit).not.toHaveBeenCalled();
    const error = container.querySelector<HTMLElement>(
      '.inline-error[data-for="range.house_age"]');
    expect(error?.textContent).toMatch(/lower bound exceeds upper bound/);
  });

  it("clears the inline message once the range is fixed", () => {
    const { container, handlers } = setup();
    type(input(container, "range-lower.house_age"), "10");
    type(input(container, "range-upper.house_age"), "5");
    submit(container);
    type(input(container, "range-upper.house_age"), "20");
    submit(container);
    expect(handlers.onSubmit).toHaveBeenCalledTimes(1);
    const error = container.querySelector<HTMLElement>(
      '.inline-error[data-for="range.house_age"]');
    expect(error?.textContent).toBe("");
  });

  it("switching the property type notifies the app to refetch the schema", () => {
    const { container, handlers, draft } = setup();
    const select = container.querySelector<HTMLSelectElement>(
      '[name="property_type"]')!;
    select.value = "House";
    select.dispatchEvent(new Event("change", { bubbles: true }));
    expect(handlers.onTypeChange).toHaveBeenCalledWith("House");
    expect(draft.propertyType).toBe("House");
  });

  it("edits after a render round-trip into the draft", () => {
    const { container, draft } = setup();
    type(input(container, "address"), "5 Dongmen Rd., Tainan");
    type(input(container, "detail.house_age"), "12");
    type(input(container, "labels.land_use_designation"), "commercial");
    expect(draft.address).toBe("5 Dongmen Rd., Tainan");
    expect(draft.details["house_age"]).toBe("12");
    expect(draft.labels["land_use_designation"]).toBe("commercial");
  });

  it("re-rendering from the same draft preserves entered values", () => {
    const { container, draft } = setup();
    type(input(container, "detail.house_age"), "12");
    const again = document.createElement("div");
    renderConfigurationForm(again, SCHEMA, draft,
                            { onSubmit: vi.fn(), onTypeChange: vi.fn() });
    expect(input(again, "detail.house_age").value).toBe("12");
  });
});

/** Configuration screen: property type, details, per-feature acceptance
 * conditions. Rendered from the schema endpoint, never hardcoded, so new
 * features appear automatically. Blank fields are allowed everywhere.
 */

import type { SchemaResponse } from "./types.js";
import { Draft, validateDraft } from "./validate.js";

export interface FormHandlers {
  onSubmit(draft: Draft): void;
  onTypeChange(propertyType: string): void;
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

const labeled = (labelText: string, input: HTMLElement): HTMLElement => {
  const wrap = el("label", "field");
  wrap.append(el("span", "field-label", labelText), input);
  return wrap;
};

function textInput(name: string, value: string, onInput: (v: string) => void,
                   type = "text"): HTMLInputElement {
  const input = el("input");
  input.type = type;
  input.name = name;
  input.value = value;
  input.addEventListener("input", () => onInput(input.value));
  return input;
}

export function renderConfigurationForm(
  container: HTMLElement,
  schema: SchemaResponse,
  draft: Draft,
  handlers: FormHandlers,
): void {
  container.replaceChildren();
  const form = el("form", "configuration-form");
  form.noValidate = true;

  const typeSelect = el("select");
  typeSelect.name = "property_type";
  for (const label of schema.property_types) {
    const option = el("option", undefined, label);
    option.value = label;
    option.selected = label === draft.propertyType;
    typeSelect.append(option);
  }
  typeSelect.addEventListener("change", () => {
    draft.propertyType = typeSelect.value;
    handlers.onTypeChange(typeSelect.value);
  });
  form.append(labeled("Property type", typeSelect));

  form.append(labeled("Address", textInput("address", draft.address, (v) => {
    draft.address = v;
  })));

  const details = el("fieldset", "details");
  details.append(el("legend", undefined, "Property details (leave blank if unknown)"));
  for (const decl of schema.features) {
    const units = decl.units ? ` (${decl.units})` : "";
    const value = draft.details[decl.name] ?? "";
    const input = textInput(`detail.${decl.name}`, value, (v) => {
      draft.details[decl.name] = v;
    });
    details.append(labeled(`${decl.name}${units}`, input));
    if (decl.kind === "temporal") {
      const date = textInput(`detail-date.${decl.name}`,
                             draft.detailDates[decl.name] ?? "", (v) => {
        draft.detailDates[decl.name] = v;
      }, "date");
      details.append(labeled(`${decl.name} as of`, date));
    }
  }
  form.append(details);

  const conditions = el("fieldset", "conditions");
  conditions.append(el("legend", undefined,
                       "Neighbor conditions (leave blank for no constraint)"));
  for (const decl of schema.features) {
    if (decl.kind === "numeric") {
      const range = draft.ranges[decl.name] ?? { lower: "", upper: "" };
      draft.ranges[decl.name] = range;
      const row = el("div", "range-row");
      row.append(
        labeled(`${decl.name} from`,
                textInput(`range-lower.${decl.name}`, range.lower, (v) => {
                  range.lower = v;
                })),
        labeled("to", textInput(`range-upper.${decl.name}`, range.upper, (v) => {
          range.upper = v;
        })),
      );
      const error = el("span", "inline-error");
      error.dataset.for = `range.${decl.name}`;
      row.append(error);
      conditions.append(row);
    } else if (decl.kind === "categorical") {
      const input = textInput(`labels.${decl.name}`, draft.labels[decl.name] ?? "",
                              (v) => {
                                draft.labels[decl.name] = v;
                              });
      input.placeholder = "allowed labels, comma-separated";
      conditions.append(labeled(`${decl.name} among`, input));
    }
  }
  const kInput = textInput("k", draft.k, (v) => {
    draft.k = v;
  });
  const kError = el("span", "inline-error");
  kError.dataset.for = "k";
  conditions.append(labeled("Neighbors to use (k)", kInput), kError);
  form.append(conditions);

  const llmToggle = el("input");
  llmToggle.type = "checkbox";
  llmToggle.name = "want_llm";
  llmToggle.checked = draft.wantLlm;
  llmToggle.addEventListener("change", () => {
    draft.wantLlm = llmToggle.checked;
  });
  form.append(labeled("Use the language-model explanation backend", llmToggle));

  const submit = el("button", "submit-valuation", "Get valuation");
  submit.type = "submit";
  form.append(submit);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const errors = validateDraft(draft, schema);
    for (const span of form.querySelectorAll<HTMLElement>(".inline-error")) {
      span.textContent = errors[span.dataset.for ?? ""] ?? "";
    }
    if (Object.keys(errors).length === 0) {
      handlers.onSubmit(draft);
    }
  });

  container.append(form);
}

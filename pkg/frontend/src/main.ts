import { fetchSchema, submitValuation } from "./api.js";
import { renderConfigurationForm } from "./form.js";
import { renderResultScreen } from "./results.js";
import { UiSession } from "./session.js";
import type { SchemaResponse } from "./types.js";
import { Draft, draftToPayload, emptyDraft } from "./validate.js";

const DEFAULT_TYPE = "Apartment";

async function start(root: HTMLElement): Promise<void> {
  let schema: SchemaResponse = await fetchSchema(DEFAULT_TYPE);
  const session = new UiSession(emptyDraft(schema.property_type, schema.default_k));

  const banner = document.createElement("p");
  banner.className = "error-banner";
  const screen = document.createElement("div");
  root.append(banner, screen);

  const showConfiguration = () => {
    renderConfigurationForm(screen, schema, session.draft, {
      onSubmit: (draft) => void runValuation(draft),
      onTypeChange: (propertyType) => void switchType(propertyType),
    });
  };

  const switchType = async (propertyType: string) => {
    try {
      schema = await fetchSchema(propertyType);
      session.draft.propertyType = schema.property_type;
      banner.textContent = "";
    } catch (error) {
      banner.textContent = String(error);
    }
    showConfiguration();
  };

  const runValuation = async (draft: Draft) => {
    const signal = session.beginRequest();
    banner.textContent = "Valuing…";
    try {
      const report = await submitValuation(draftToPayload(draft, schema), signal);
      session.lastReport = report;
      banner.textContent = "";
      renderResultScreen(screen, report, { onBack: showConfiguration });
    } catch (error) {
      if ((error as Error).name === "AbortError") return; // superseded
      banner.textContent = String(error);
    } finally {
      session.finishRequest();
    }
  };

  showConfiguration();
}

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (root) {
    void start(root).catch((error) => {
      root.textContent = `Failed to load: ${error}`;
    });
  }
});

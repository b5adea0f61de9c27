import type { ValuationReport } from "./types.js";
import { Draft } from "./validate.js";

/** Per-tab UI state: the editable draft, the last report, and the single
 * in-flight request. Re-submitting aborts the stale request first. */
export class UiSession {
  draft: Draft;
  lastReport: ValuationReport | null = null;
  private controller: AbortController | null = null;

  constructor(draft: Draft) {
    this.draft = draft;
  }

  beginRequest(): AbortSignal {
    this.controller?.abort();
    this.controller = new AbortController();
    return this.controller.signal;
  }

  finishRequest(): void {
    this.controller = null;
  }
}

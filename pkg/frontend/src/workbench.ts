// Approval workbench: render the checklist for a building with checkboxes,
// collect fulfilled/open verdicts with optional notes, post them back pinned
// to the checklist's as_of, and flag stale items with both revision numbers.

import { ApiError, ReqbaseClient } from "./api.js";
import { clear, el } from "./dom.js";
import type { ChecklistDto, StaleRowDto } from "./types.js";

interface Touched {
  verdict: "fulfilled" | "open";
  note?: string;
}

export class ApprovalWorkbench {
  checklist: ChecklistDto | null = null;
  touched = new Map<string, Touched>();

  private buildingInput!: HTMLInputElement | HTMLSelectElement;
  private statusBanner!: HTMLElement;
  private tableBox!: HTMLElement;
  private messageBox!: HTMLElement;

  constructor(
    private client: ReqbaseClient,
    private root: HTMLElement,
  ) {}

  async mount(initialBuilding?: string): Promise<void> {
    const schema = await this.client.getSchema();
    const buildingDef = schema.attributes.find((a) => a.name === "building");
    clear(this.root);

    if (buildingDef && buildingDef.allowed_values.length) {
      const select = el("select", { class: "building-pick" });
      for (const value of buildingDef.allowed_values) {
        select.append(el("option", { value }, value));
      }
      this.buildingInput = select;
    } else {
      this.buildingInput = el("input", { class: "building-pick", placeholder: "building" });
    }
    if (initialBuilding) this.buildingInput.value = initialBuilding;

    const loadButton = el("button", { class: "load-checklist" }, "Load checklist");
    loadButton.addEventListener("click", () => void this.load());
    const submitButton = el("button", { class: "submit-approvals" }, "Submit results");
    submitButton.addEventListener("click", () => void this.submit());

    this.statusBanner = el("div", { class: "status-banner" });
    this.messageBox = el("div", { class: "wb-message" });
    this.tableBox = el("div", { class: "wb-table" });

    this.root.append(
      el("h2", {}, "Approval checklist"),
      el("div", { class: "wb-controls" }, this.buildingInput, loadButton, submitButton),
      this.statusBanner,
      this.messageBox,
      this.tableBox,
    );
    if (initialBuilding) await this.load();
  }

  get building(): string {
    return this.buildingInput.value.trim();
  }

  async load(): Promise<void> {
    this.touched.clear();
    this.messageBox.textContent = "";
    const [checklist, staleRows] = await Promise.all([
      this.client.getChecklist(this.building),
      this.client.getStale(),
    ]);
    this.checklist = checklist;
    this.renderTable(staleRows.stale);
    await this.refreshStatus();
  }

  async refreshStatus(): Promise<void> {
    const status = await this.client.getStatus(this.building);
    this.statusBanner.textContent =
      `fulfilled ${status.fulfilled} / open ${status.open} / ` +
      `unapproved ${status.unapproved} / stale ${status.stale}`;
  }

  private renderTable(staleRows: StaleRowDto[]): void {
    const checklist = this.checklist!;
    const staleByKey = new Map(
      staleRows.filter((row) => row.subject === checklist.subject).map((row) => [row.id, row]),
    );
    const body = el("tbody", {});
    for (const item of checklist.items) {
      const checkbox = el("input", { type: "checkbox", class: "wb-check", "data-req-id": item.id }) as HTMLInputElement;
      checkbox.checked = item.verdict === "fulfilled";
      checkbox.addEventListener("change", () => {
        this.mark(item.id, checkbox.checked ? "fulfilled" : "open");
      });
      const note = el("input", {
        type: "text",
        class: "wb-note",
        placeholder: "note",
        "data-req-id": item.id,
      }) as HTMLInputElement;
      note.addEventListener("change", () => {
        const entry = this.touched.get(item.id);
        if (entry) entry.note = note.value || undefined;
      });

      const staleInfo = staleByKey.get(item.id);
      const flags: (HTMLElement | string)[] = [];
      if (staleInfo) {
        flags.push(
          el(
            "span",
            { class: "wb-stale", "data-req-id": item.id },
            `stale: approved rev ${staleInfo.approved_revision}, current rev ${staleInfo.current_revision}`,
          ),
        );
      }
      const row = el(
        "tr",
        { class: `wb-row${staleInfo ? " stale" : ""}`, "data-req-id": item.id },
        el("td", { class: "wb-text" }, item.text, ...(flags.length ? [el("br", {}), ...flags] : [])),
        el("td", { class: "wb-id" }, `${item.id}`),
        el("td", { class: "wb-outline" }, item.outline),
        el("td", { class: "wb-verdict" }, item.verdict ?? ""),
        el("td", {}, checkbox),
        el("td", {}, note),
      );
      body.append(row);
    }
    clear(this.tableBox);
    this.tableBox.append(
      el("p", { class: "wb-meta" }, `Checklist ${checklist.subject}, as-of ${checklist.as_of}`),
      el(
        "table",
        { class: "checklist" },
        el(
          "thead",
          {},
          el(
            "tr",
            {},
            el("th", {}, "Requirement"),
            el("th", {}, "Id"),
            el("th", {}, "Outline"),
            el("th", {}, "Verdict"),
            el("th", {}, "Approved"),
            el("th", {}, "Note"),
          ),
        ),
        body,
      ),
    );
  }

  mark(id: string, verdict: "fulfilled" | "open"): void {
    this.touched.set(id, { ...this.touched.get(id), verdict });
  }

  async submit(): Promise<void> {
    if (!this.checklist) return;
    if (this.touched.size === 0) {
      this.messageBox.textContent = "Nothing to submit (no items toggled).";
      return;
    }
    const results = Array.from(this.touched.entries()).map(([id, entry]) => ({
      id,
      verdict: entry.verdict,
      ...(entry.note ? { note: entry.note } : {}),
    }));
    let outcomes;
    try {
      outcomes = (await this.client.postApprovals(this.checklist.subject, this.checklist.as_of, results)).outcomes;
    } catch (error) {
      if (error instanceof ApiError) {
        this.messageBox.textContent = `${error.body.code}: ${error.body.detail}`;
        return;
      }
      throw error;
    }
    clear(this.messageBox);
    for (const outcome of outcomes) {
      if (outcome.status === "recorded") {
        this.messageBox.append(
          el("div", { class: "wb-outcome recorded", "data-req-id": outcome.id },
            `${outcome.id} recorded (${outcome.verdict} at revision ${outcome.approved_revision})`),
        );
      } else {
        const regenerate = el("button", { class: "wb-regenerate", "data-req-id": outcome.id }, "regenerate checklist");
        regenerate.addEventListener("click", () => void this.load());
        this.messageBox.append(
          el("div", { class: `wb-outcome ${outcome.status}`, "data-req-id": outcome.id },
            `${outcome.id} ${outcome.status}: ${outcome.detail ?? ""} `, regenerate),
        );
      }
    }
    this.touched.clear();
    const staleRows = await this.client.getStale();
    this.checklist = await this.client.getChecklist(this.building);
    this.renderTable(staleRows.stale);
    await this.refreshStatus();
  }
}

// View explorer: a query builder fed by the schema's value lists, a results
// table with the classic filtered-view columns, and save/load of named views.

import { ApiError, ReqbaseClient } from "./api.js";
import { attrText, clear, el } from "./dom.js";
import type { QueryResultDto, SchemaDto } from "./types.js";

function excerpt(text: string, max = 72): string {
  const flat = text.split(/\s+/).join(" ");
  return flat.length <= max ? flat : flat.slice(0, max - 3).trimEnd() + "...";
}

export class ViewExplorer {
  private schema: SchemaDto | null = null;
  private queryBox!: HTMLInputElement;
  private errorBox!: HTMLElement;
  private resultsBox!: HTMLElement;
  private viewSelect!: HTMLSelectElement;
  private pickers = new Map<string, HTMLSelectElement | HTMLInputElement>();
  private textSearch!: HTMLInputElement;

  constructor(
    private client: ReqbaseClient,
    private root: HTMLElement,
  ) {}

  async mount(): Promise<void> {
    this.schema = await this.client.getSchema();
    clear(this.root);

    const pickerRow = el("div", { class: "picker-row" });
    for (const attr of this.schema.attributes) {
      if (attr.kind !== "enum-single" && attr.kind !== "enum-multi") continue;
      let control: HTMLSelectElement | HTMLInputElement;
      if (attr.allowed_values.length) {
        const select = el("select", { class: "picker", "data-attr": attr.name });
        select.append(el("option", { value: "" }, `${attr.name}: any`));
        for (const value of attr.allowed_values) {
          select.append(el("option", { value }, value));
        }
        control = select;
      } else {
        control = el("input", { class: "picker", "data-attr": attr.name, placeholder: `${attr.name} (any value)` });
      }
      control.addEventListener("change", () => this.composeQuery());
      this.pickers.set(attr.name, control);
      pickerRow.append(el("label", { class: "picker-label" }, control));
    }
    this.textSearch = el("input", { class: "picker", placeholder: "text contains..." });
    this.textSearch.addEventListener("change", () => this.composeQuery());
    pickerRow.append(el("label", { class: "picker-label" }, this.textSearch));

    this.queryBox = el("input", { class: "query-box", placeholder: "query (editable)" });
    const runButton = el("button", { class: "run-query" }, "Run");
    runButton.addEventListener("click", () => void this.run());

    const saveName = el("input", { class: "view-name", placeholder: "view name" });
    const saveButton = el("button", { class: "save-view" }, "Save view");
    saveButton.addEventListener("click", () => void this.save(saveName.value));

    this.viewSelect = el("select", { class: "view-select" });
    const loadButton = el("button", { class: "load-view" }, "Run view");
    loadButton.addEventListener("click", () => void this.runSaved());

    this.errorBox = el("div", { class: "query-error", hidden: "hidden" });
    this.resultsBox = el("div", { class: "results" });

    this.root.append(
      el("h2", {}, "Query the database"),
      pickerRow,
      el("div", { class: "query-row" }, this.queryBox, runButton, saveName, saveButton),
      el("div", { class: "views-row" }, el("span", {}, "Stored views: "), this.viewSelect, loadButton),
      this.errorBox,
      this.resultsBox,
    );
    await this.refreshViews();
  }

  composeQuery(): void {
    const terms: string[] = [];
    for (const [name, control] of this.pickers) {
      const value = control.value.trim();
      if (!value) continue;
      const attr = this.schema!.attributes.find((a) => a.name === name)!;
      const op = attr.kind === "enum-multi" ? "~" : "=";
      const quoted = /[\s"\\]/.test(value) ? `"${value.replaceAll("\\", "\\\\").replaceAll('"', '\\"')}"` : value;
      terms.push(`${name}${op}${quoted}`);
    }
    const text = this.textSearch.value.trim();
    if (text) terms.push(`text~"${text.replaceAll("\\", "\\\\").replaceAll('"', '\\"')}"`);
    this.queryBox.value = terms.join(" ");
  }

  async refreshViews(): Promise<void> {
    const { views } = await this.client.listViews();
    clear(this.viewSelect as unknown as HTMLElement);
    for (const view of views) {
      this.viewSelect.append(el("option", { value: view.name }, `${view.name} (${view.owner})`));
    }
  }

  private showError(message: string): void {
    this.errorBox.textContent = message;
    this.errorBox.removeAttribute("hidden");
  }

  private clearError(): void {
    this.errorBox.textContent = "";
    this.errorBox.setAttribute("hidden", "hidden");
  }

  async run(): Promise<void> {
    this.clearError();
    try {
      const results = await this.client.query(this.queryBox.value);
      this.renderResults(results);
    } catch (error) {
      if (error instanceof ApiError) {
        const position = error.body.position != null ? ` (column ${error.body.position})` : "";
        this.showError(`${error.body.code}: ${error.body.detail}${position}`);
        return;
      }
      throw error;
    }
  }

  async save(name: string): Promise<void> {
    this.clearError();
    try {
      await this.client.saveView(name, this.queryBox.value);
      await this.refreshViews();
    } catch (error) {
      if (error instanceof ApiError) {
        this.showError(`${error.body.code}: ${error.body.detail}`);
        return;
      }
      throw error;
    }
  }

  async runSaved(): Promise<void> {
    const name = this.viewSelect.value;
    if (!name) return;
    this.clearError();
    const results = await this.client.runView(name);
    this.renderResults(results);
  }

  renderResults(results: QueryResultDto): void {
    const attrNames = this.schema!.attributes.map((a) => a.name).filter((n) => n !== "status");
    const head = el(
      "tr",
      {},
      el("th", {}, "Requirement"),
      el("th", {}, "Status"),
      ...attrNames.map((name) => el("th", {}, name)),
    );
    const body = el("tbody", {});
    for (const record of results.requirements) {
      const opener = el("a", { href: "#", class: "req-link", "data-req-id": record.id }, record.id);
      const row = el(
        "tr",
        { class: "view-row", "data-req-id": record.id },
        el("td", {}, opener, ` ${excerpt(record.text)}`),
        el("td", {}, attrText(record.attributes["status"])),
        ...attrNames.map((name) => el("td", {}, attrText(record.attributes[name]))),
      );
      body.append(row);
    }
    clear(this.resultsBox);
    this.resultsBox.append(
      el("p", { class: "result-count" }, `${results.count} matching requirements`),
      el("table", { class: "view-results" }, el("thead", {}, head), body),
    );
  }
}

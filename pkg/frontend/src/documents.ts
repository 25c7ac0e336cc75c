// Document browser: list documents, show the server-rendered document HTML
// (one rendering source of truth), navigate from requirement anchors to the
// record detail and back to the document position.

import { ApiError, ReqbaseClient } from "./api.js";
import { attrText, clear, el } from "./dom.js";
import type { ChangeEntryDto, RequirementDto } from "./types.js";

export class DocumentBrowser {
  constructor(
    private client: ReqbaseClient,
    private root: HTMLElement,
  ) {}

  async showList(): Promise<void> {
    const { documents } = await this.client.listDocuments();
    clear(this.root);
    const list = el("ul", { class: "doc-list" });
    for (const doc of documents) {
      const link = el("a", { href: "#", class: "doc-link", "data-doc-id": doc.doc_id }, doc.title);
      link.addEventListener("click", (event) => {
        event.preventDefault();
        void this.showDocument(doc.doc_id);
      });
      list.append(
        el("li", {}, link, el("span", { class: "doc-meta" }, ` ${doc.doc_id}, group ${doc.group}, ${doc.requirements} requirements`)),
      );
    }
    this.root.append(el("h2", {}, "Specification documents"), list);
  }

  async showDocument(docId: string, anchor?: string): Promise<void> {
    let pageHtml: string;
    try {
      pageHtml = await this.client.documentHtml(docId);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.showNotFound(docId);
        return;
      }
      throw error;
    }
    const parsed = new DOMParser().parseFromString(pageHtml, "text/html");
    clear(this.root);
    const back = el("a", { href: "#", class: "nav-back" }, "< all documents");
    back.addEventListener("click", (event) => {
      event.preventDefault();
      void this.showList();
    });
    const container = el("div", { class: "doc-view", "data-doc-id": docId });
    for (const child of Array.from(parsed.body.children)) {
      container.append(document.importNode(child, true));
    }
    this.root.append(back, container);

    // requirement anchors open the record detail instead of the raw API
    for (const link of Array.from(container.querySelectorAll("a.req-link"))) {
      link.addEventListener("click", (event) => {
        event.preventDefault();
        const rid = link.getAttribute("data-req-id");
        if (rid) void this.showDetail(rid);
      });
    }
    if (anchor) {
      const target = container.querySelector(`[id="${anchor}"]`);
      (target as HTMLElement | null)?.scrollIntoView?.();
    }
  }

  showNotFound(docId: string): void {
    clear(this.root);
    this.root.append(
      el("section", { class: "not-found" },
        el("h2", {}, "Document not found"),
        el("p", {}, `There is no document named "${docId}".`)),
    );
  }

  async showDetail(rid: string): Promise<void> {
    const record = await this.client.requirementHistory(rid);
    clear(this.root);
    this.root.append(this.detailSection(record));
  }

  private detailSection(record: RequirementDto): HTMLElement {
    const backLink = el(
      "a",
      { href: "#", class: "nav-back", "data-doc-id": record.document },
      `< back to ${record.document} (${record.outline || "unplaced"})`,
    );
    backLink.addEventListener("click", (event) => {
      event.preventDefault();
      void this.showDocument(record.document, record.id);
    });

    const attrRows = Object.entries(record.attributes).map(([name, value]) =>
      el("tr", {}, el("th", {}, name), el("td", {}, attrText(value))),
    );
    const changeRows = (record.change_log ?? []).map((entry: ChangeEntryDto) =>
      el(
        "tr",
        { class: "change-row" },
        el("td", {}, entry.timestamp),
        el("td", {}, entry.actor),
        el("td", {}, entry.field),
        el("td", {}, attrText(entry.old as never) || "(none)"),
        el("td", {}, attrText(entry.new as never) || "(none)"),
      ),
    );

    return el(
      "section",
      { class: "req-detail", "data-req-id": record.id },
      backLink,
      el("h2", {}, `${record.id} (revision ${record.revision})`),
      el("p", { class: "req-text" }, record.text),
      el("table", { class: "req-attrs" }, el("tbody", {}, ...attrRows)),
      el("h3", {}, `Change log (${changeRows.length})`),
      changeRows.length
        ? el(
            "table",
            { class: "change-log" },
            el(
              "thead",
              {},
              el("tr", {}, el("th", {}, "when"), el("th", {}, "who"), el("th", {}, "field"), el("th", {}, "old"), el("th", {}, "new")),
            ),
            el("tbody", {}, ...changeRows),
          )
        : el("p", { class: "muted" }, "No modifications since creation."),
    );
  }
}

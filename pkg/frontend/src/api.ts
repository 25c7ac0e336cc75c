// Thin fetch client over the reqbase service. Unwraps the
// {data, sequence} envelope, tracks the latest seen event sequence, and
// surfaces connectivity failures through onOffline (no silent failures).

import type {
  ApprovalOutcomeDto,
  ChecklistDto,
  DocumentSummaryDto,
  Envelope,
  ErrorBody,
  QueryResultDto,
  RequirementDto,
  SchemaDto,
  StaleRowDto,
  StatusDto,
  ViewDto,
  ViewResultsDto,
  ApprovalResultItem,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ErrorBody,
  ) {
    super(body.detail || body.code);
  }
}

export class OfflineError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
  }
}

export class ReqbaseClient {
  sequence = 0;
  onSequence: ((sequence: number) => void) | null = null;
  onOffline: ((error: OfflineError) => void) | null = null;

  constructor(
    public base = "",
    public actor = "",
    public token = "",
  ) {}

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    const out: Record<string, string> = { ...extra };
    if (this.token) out["Authorization"] = `Bearer ${this.token}`;
    return out;
  }

  private async raw(path: string, init: RequestInit = {}): Promise<Response> {
    let response: Response;
    try {
      response = await fetch(this.base + path, {
        ...init,
        headers: this.headers((init.headers as Record<string, string>) ?? {}),
      });
    } catch (cause) {
      const offline = new OfflineError(cause);
      this.onOffline?.(offline);
      throw offline;
    }
    return response;
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const response = await this.raw(path, init);
    const body = (await response.json()) as Envelope<T> & { error?: ErrorBody };
    if (typeof body.sequence === "number") {
      this.sequence = body.sequence;
      this.onSequence?.(body.sequence);
    }
    if (!response.ok) {
      throw new ApiError(response.status, body.error ?? { code: "UNKNOWN", detail: "" });
    }
    return body.data;
  }

  async html(path: string): Promise<string> {
    const response = await this.raw(path);
    const sequence = Number(response.headers.get("x-sequence") ?? "0");
    if (sequence) {
      this.sequence = sequence;
      this.onSequence?.(sequence);
    }
    if (!response.ok) {
      throw new ApiError(response.status, { code: "NOT_FOUND", detail: await response.text() });
    }
    return response.text();
  }

  // reads
  getSchema(): Promise<SchemaDto> {
    return this.request("/api/schema");
  }

  getSequence(): Promise<Record<string, never>> {
    return this.request("/api/sequence");
  }

  listDocuments(): Promise<{ documents: DocumentSummaryDto[] }> {
    return this.request("/api/documents");
  }

  documentHtml(docId: string): Promise<string> {
    return this.html(`/api/documents/${encodeURIComponent(docId)}.html`);
  }

  getRequirement(id: string): Promise<RequirementDto> {
    return this.request(`/api/requirements/${id}`);
  }

  requirementHistory(id: string): Promise<RequirementDto> {
    return this.request(`/api/requirements/${id}/history`);
  }

  query(q: string): Promise<QueryResultDto> {
    return this.request(`/api/requirements?q=${encodeURIComponent(q)}`);
  }

  listViews(): Promise<{ views: ViewDto[] }> {
    return this.request("/api/views");
  }

  runView(name: string): Promise<ViewResultsDto> {
    return this.request(`/api/views/${encodeURIComponent(name)}/results`);
  }

  getChecklist(building: string): Promise<ChecklistDto> {
    return this.request(`/api/buildings/${encodeURIComponent(building)}/checklist`);
  }

  getStatus(building: string): Promise<StatusDto> {
    return this.request(`/api/buildings/${encodeURIComponent(building)}/status`);
  }

  getStale(): Promise<{ stale: StaleRowDto[] }> {
    return this.request("/api/stale");
  }

  // writes (carry the actor; optimistic-concurrency metadata is explicit)
  saveView(name: string, query: string): Promise<ViewDto> {
    return this.request("/api/views", {
      method: "POST",
      headers: { "Content-Type": "application/json", "X-Actor": this.actor },
      body: JSON.stringify({ name, query }),
    });
  }

  updateRequirement(
    id: string,
    expectedRevision: number,
    changes: { field: string; value: unknown }[],
  ): Promise<RequirementDto> {
    return this.request(`/api/requirements/${id}`, {
      method: "POST",
      headers: {
        "Content-Type": "application/json",
        "X-Actor": this.actor,
        "X-Expected-Revision": String(expectedRevision),
      },
      body: JSON.stringify({ changes }),
    });
  }

  postApprovals(
    subject: string,
    asOf: number,
    results: ApprovalResultItem[],
  ): Promise<{ outcomes: ApprovalOutcomeDto[] }> {
    return this.request("/api/approvals", {
      method: "POST",
      headers: { "Content-Type": "application/json", "X-Actor": this.actor },
      body: JSON.stringify({ subject, as_of: asOf, results }),
    });
  }
}

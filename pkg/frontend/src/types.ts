// Response shapes of the reqbase HTTP API (see ../../docs/api.md).
// The client displays fetched values only; no domain rules live here.

export interface Envelope<T> {
  data: T;
  sequence: number;
}

export interface ErrorBody {
  code: string;
  detail: string;
  current_revision?: number;
  position?: number;
  line?: number;
  id?: string;
  violations?: { code: string; attribute: string; message: string }[];
}

export type AttrValue = string | string[];

export interface RequirementDto {
  id: string;
  text: string;
  attributes: Record<string, AttrValue>;
  revision: number;
  created_at: string;
  created_by: string;
  document: string;
  outline: string;
  modified_at: string;
  change_log?: ChangeEntryDto[];
}

export interface ChangeEntryDto {
  timestamp: string;
  actor: string;
  field: string;
  old: AttrValue | null;
  new: AttrValue | null;
}

export interface AttributeDefDto {
  name: string;
  kind: "enum-single" | "enum-multi" | "text" | "date";
  allowed_values: string[];
  required: boolean;
  default: string | null;
}

export interface SchemaDto {
  attributes: AttributeDefDto[];
}

export interface DocumentSummaryDto {
  doc_id: string;
  title: string;
  group: string;
  requirements: number;
}

export interface QueryResultDto {
  count: number;
  query?: string;
  requirements: RequirementDto[];
}

export interface ViewDto {
  name: string;
  owner: string;
  query: string;
}

export interface ViewResultsDto extends QueryResultDto {
  view: string;
}

export interface ChecklistItemDto {
  id: string;
  outline: string;
  text: string;
  verdict: "fulfilled" | "open" | null;
  document: string;
  revision: number;
  approved_revision: number | null;
  stale: boolean;
}

export interface ChecklistDto {
  subject: string;
  as_of: number;
  items: ChecklistItemDto[];
}

export interface StatusDto {
  building: string;
  fulfilled: number;
  open: number;
  unapproved: number;
  stale: number;
  total: number;
}

export interface StaleRowDto {
  id: string;
  subject: string;
  approved_revision: number;
  current_revision: number;
}

export interface ApprovalOutcomeDto {
  id: string;
  status: "recorded" | "stale" | "unknown";
  detail?: string;
  current_revision?: number;
  approved_revision?: number;
  verdict?: string;
}

export interface ApprovalResultItem {
  id: string;
  verdict: "fulfilled" | "open";
  note?: string;
}

"""Value-adding procedures on top of the repository: per-building design
specifications, cross-group dependency discovery, approval checklists with
read-back, and stale-approval detection.

All generation functions are pure reads over an immutable snapshot;
record_approval writes through the store's serialized appender.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass
from datetime import datetime
from typing import TYPE_CHECKING

from . import docio, query as querylang
from .core import (
    ReqbaseError,
    Requirement,
    RequirementId,
    ValidationError,
    Violation,
)
from .docio import DocNode, SpecDocument

if TYPE_CHECKING:  # pragma: no cover
    from .store import Snapshot, Store

VERDICT_FULFILLED = "fulfilled"
VERDICT_OPEN = "open"
VERDICTS = (VERDICT_FULFILLED, VERDICT_OPEN)


@dataclass(frozen=True)
class ApprovalRecord:
    """Checklist result pinning a requirement to the revision that was approved.

    Multiple records per requirement are allowed; the latest per
    (requirement, subject) is authoritative.
    """

    requirement: RequirementId
    approved_revision: int
    verdict: str
    subject: str
    actor: str
    timestamp: datetime
    note: str | None = None


@dataclass(frozen=True)
class ChecklistItem:
    rid: RequirementId
    outline: str
    text: str
    verdict: str | None
    document: str
    revision: int
    approved_revision: int | None

    @property
    def stale(self) -> bool:
        return self.approved_revision is not None and self.approved_revision < self.revision


@dataclass(frozen=True)
class Checklist:
    """The full design specification for one subject, rendered as verifiable
    items, pinned to the event sequence it was generated from."""

    subject: str
    as_of: int
    items: tuple[ChecklistItem, ...]


@dataclass(frozen=True)
class StaleApproval:
    rid: RequirementId
    subject: str
    approved_revision: int
    current_revision: int


@dataclass(frozen=True)
class StatusReport:
    """Four disjoint counts partitioning a building's requirement set.
    stale takes precedence over the recorded verdict."""

    building: str
    fulfilled: int
    open: int
    unapproved: int
    stale: int

    @property
    def total(self) -> int:
        return self.fulfilled + self.open + self.unapproved + self.stale

    def to_dict(self) -> dict[str, object]:
        return {
            "building": self.building,
            "fulfilled": self.fulfilled,
            "open": self.open,
            "unapproved": self.unapproved,
            "stale": self.stale,
            "total": self.total,
        }


@dataclass(frozen=True)
class ApprovalOutcome:
    """Per-item result of a read-back: recorded, stale, or unknown."""

    rid: RequirementId
    status: str
    detail: str = ""
    approval: ApprovalRecord | None = None
    current_revision: int | None = None

    def to_dict(self) -> dict[str, object]:
        out: dict[str, object] = {"id": str(self.rid), "status": self.status}
        if self.detail:
            out["detail"] = self.detail
        if self.current_revision is not None:
            out["current_revision"] = self.current_revision
        if self.approval is not None:
            out["approved_revision"] = self.approval.approved_revision
            out["verdict"] = self.approval.verdict
        return out


def _check_building(snapshot: "Snapshot", building: str) -> None:
    adef = snapshot.schema.get("building")
    if adef is None:
        raise ValidationError([Violation("unknown-attribute", "building", "schema has no building attribute")])
    if not building:
        raise ValidationError([Violation("illegal-value", "building", "building must be non-empty")])
    if adef.allowed_values and building not in adef.allowed_values:
        raise ValidationError(
            [Violation("illegal-value", "building", f"unknown building value {building!r}")]
        )


def latest_approvals(snapshot: "Snapshot") -> dict[tuple[RequirementId, str], ApprovalRecord]:
    """Latest approval per (requirement, subject); event order is time order."""
    latest: dict[tuple[RequirementId, str], ApprovalRecord] = {}
    for record in snapshot.approvals:
        latest[(record.requirement, record.subject)] = record
    return latest


def _building_records(snapshot: "Snapshot", building: str) -> list[Requirement]:
    return querylang.evaluate(
        querylang.Query((querylang.AttrContains("building", building),)), snapshot
    )


def _document_outline_order(records: list[Requirement]) -> list[Requirement]:
    return sorted(records, key=lambda r: (r.document, querylang.outline_key(r.outline), r.id))


def generate_design_spec(building: str, snapshot: "Snapshot") -> SpecDocument:
    """Virtual document with every requirement whose building set contains the
    building, grouped by authoring group (schema value-list order first, then
    unlisted groups alphabetically), each group in document-outline order."""
    _check_building(snapshot, building)
    records = _building_records(snapshot, building)

    buckets: dict[str, list[Requirement]] = {}
    for req in records:
        group = req.attributes.get("group")
        buckets.setdefault(group if isinstance(group, str) else "", []).append(req)

    gdef = snapshot.schema.get("group")
    listed = [g for g in (gdef.allowed_values if gdef else ()) if g in buckets]
    unlisted = sorted(g for g in buckets if g not in listed)
    nodes = []
    for group in [*listed, *unlisted]:
        members = _document_outline_order(buckets[group])
        nodes.append(
            DocNode(
                docio.HEADING,
                text=group or "(no group)",
                level=1,
                children=tuple(DocNode(docio.REQUIREMENT, rid=r.id) for r in members),
            )
        )
    return SpecDocument(
        doc_id=f"design-spec:{building}",
        title=f"Design Specification: {building}",
        owning_group="",
        nodes=tuple(nodes),
    )


def find_external_requirements(
    building: str, owning_group: str, snapshot: "Snapshot"
) -> list[Requirement]:
    """Requirements affecting the building that were specified outside the
    responsible expert group."""
    _check_building(snapshot, building)
    q = querylang.Query(
        (
            querylang.AttrContains("building", building),
            querylang.GroupIsNot(owning_group),
        )
    )
    return querylang.evaluate(q, snapshot)


def generate_checklist(building: str, snapshot: "Snapshot") -> Checklist:
    """Checklist over the building's entire specification, in document-outline
    order grouped by authoring document, carrying the latest verdict per item."""
    _check_building(snapshot, building)
    records = _document_outline_order(_building_records(snapshot, building))
    latest = latest_approvals(snapshot)
    items = []
    for req in records:
        approval = latest.get((req.id, building))
        items.append(
            ChecklistItem(
                rid=req.id,
                outline=req.outline,
                text=req.text,
                verdict=approval.verdict if approval else None,
                document=req.document,
                revision=req.revision,
                approved_revision=approval.approved_revision if approval else None,
            )
        )
    return Checklist(building, snapshot.as_of, tuple(items))


def record_approval(
    store: "Store",
    actor: str,
    subject: str,
    results: list[tuple[RequirementId, str, str | None]],
    as_of: int | None = None,
) -> list[ApprovalOutcome]:
    """Read checklist results back into the store.

    Each item is recorded at the requirement's current revision. Items whose
    revision changed between the checklist's as_of and now are rejected with
    "checklist stale, regenerate"; unknown ids are rejected as unknown. Other
    items are still recorded. An empty result list appends nothing.
    """
    return store.record_approvals(actor, subject, results, as_of=as_of)


def find_stale_approvals(snapshot: "Snapshot") -> list[StaleApproval]:
    """Every (requirement, subject) whose latest approval predates the current
    revision, i.e. the record was modified after it was used for approval."""
    out = []
    for (rid, subject), approval in latest_approvals(snapshot).items():
        req = snapshot.requirements.get(rid)
        if req is not None and approval.approved_revision < req.revision:
            out.append(StaleApproval(rid, subject, approval.approved_revision, req.revision))
    out.sort(key=lambda s: (s.rid, s.subject))
    return out


def approval_status_report(building: str, snapshot: "Snapshot") -> StatusReport:
    """Partition the building's requirements into fulfilled / open /
    unapproved / stale."""
    _check_building(snapshot, building)
    latest = latest_approvals(snapshot)
    fulfilled = opened = unapproved = stale = 0
    for req in _building_records(snapshot, building):
        approval = latest.get((req.id, building))
        if approval is None:
            unapproved += 1
        elif approval.approved_revision < req.revision:
            stale += 1
        elif approval.verdict == VERDICT_FULFILLED:
            fulfilled += 1
        else:
            opened += 1
    return StatusReport(building, fulfilled, opened, unapproved, stale)


# --- serialization ----------------------------------------------------------

def approval_to_dict(record: ApprovalRecord) -> dict[str, object]:
    from . import core

    return {
        "requirement": str(record.requirement),
        "approved_revision": record.approved_revision,
        "verdict": record.verdict,
        "subject": record.subject,
        "actor": record.actor,
        "timestamp": core.ts_to_str(record.timestamp),
        "note": record.note,
    }


def checklist_to_dict(checklist: Checklist) -> dict[str, object]:
    return {
        "subject": checklist.subject,
        "as_of": checklist.as_of,
        "items": [
            {
                "id": str(i.rid),
                "outline": i.outline,
                "text": i.text,
                "verdict": i.verdict,
                "document": i.document,
                "revision": i.revision,
                "approved_revision": i.approved_revision,
                "stale": i.stale,
            }
            for i in checklist.items
        ],
    }


# --- checklist export and results read-back ---------------------------------

_BOXES = {VERDICT_FULFILLED: "[x]", VERDICT_OPEN: "[o]", None: "[ ]"}


def format_checklist_text(checklist: Checklist) -> str:
    """Plain-text table, columns text | id | box. [x] fulfilled, [o] open,
    [ ] not yet approved."""
    lines = [f"Checklist: {checklist.subject}", f"as-of: {checklist.as_of}", ""]
    for item in checklist.items:
        flat = " ".join(item.text.split())
        lines.append(f"{flat} | {item.rid} | {_BOXES[item.verdict]}")
    return "\n".join(lines) + "\n"


def render_checklist_html(snapshot: "Snapshot", checklist: Checklist) -> str:
    title = f"Checklist {checklist.subject}"
    rows = []
    for item in checklist.items:
        classes = ["cl-row", f"verdict-{item.verdict or 'none'}"]
        if item.stale:
            classes.append("stale")
        checked = " checked" if item.verdict == VERDICT_FULFILLED else ""
        rows.append(
            f'<tr class="{" ".join(classes)}" data-req-id="{item.rid}">'
            f'<td class="cl-text">{html.escape(item.text)}</td>'
            f'<td class="cl-id">{docio.req_link(item.rid)}</td>'
            f'<td class="cl-box"><input type="checkbox"{checked} disabled></td>'
            "</tr>"
        )
    body = (
        f"<h1>{html.escape(title)}</h1>\n"
        f'<p class="cl-meta">as-of {checklist.as_of}</p>\n'
        '<table class="checklist">\n'
        "<thead><tr><th>Requirement</th><th>Id</th><th>Approved</th></tr></thead>\n"
        f'<tbody>\n{chr(10).join(rows)}\n</tbody>\n</table>'
    )
    return docio.html_page(title, body)


class ResultsParseError(ReqbaseError):
    """Malformed approval results file. line is 1-based."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


_RESULT_RE = re.compile(r"^(R[0-9]+)\s+(fulfilled|open)(?:\s+(.*))?$")


def parse_results_file(text: str) -> list[tuple[RequirementId, str, str | None]]:
    """Approval import format: one `R<n> fulfilled|open [note...]` per line.
    Blank lines and # comments are skipped."""
    results = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _RESULT_RE.match(line)
        if not m:
            raise ResultsParseError(
                "expected `R<n> fulfilled|open [note...]`", line_no
            )
        try:
            rid = RequirementId.parse(m.group(1))
        except ValueError as exc:
            raise ResultsParseError(str(exc), line_no)
        note = m.group(3).strip() if m.group(3) else None
        results.append((rid, m.group(2), note))
    return results

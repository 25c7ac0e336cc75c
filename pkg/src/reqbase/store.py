"""Event-sourced repository of requirements, schema, documents, views and
approvals, with optimistic concurrency control and durable persistence.

The append-only log is the single source of truth; the in-memory snapshot is
a deterministic fold over it, rebuilt at load. Many readers share immutable
snapshots without locking; all writes funnel through one serialized appender
guarded by a thread lock in-process and a pid lock file across processes.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, Mapping

from . import core, docio, eventlog, query as querylang, workflows
from .core import (
    ConflictError,
    NotFoundError,
    ReqbaseError,
    Requirement,
    RequirementId,
    ValidationError,
    Violation,
)
from .docio import DocumentSyntaxError, ImportReport, SpecDocument
from .eventlog import Event, LogCorruptError
from .query import Query, StoredView
from .workflows import ApprovalOutcome, ApprovalRecord

Clock = Callable[[], datetime]


class RevisionConflictError(ConflictError):
    """A concurrent edit won: the record's revision moved past the one the
    caller read. Carries the current revision for retry-after-merge."""

    def __init__(self, rid: RequirementId, current_revision: int):
        self.rid = rid
        self.current_revision = current_revision
        super().__init__(
            f"{rid}: revision conflict, current revision is {current_revision}"
        )


class StoreLockedError(ReqbaseError):
    pass


@dataclass(frozen=True)
class Snapshot:
    """Immutable state as of one event sequence number. A deterministic
    function of the event prefix [1..as_of]."""

    as_of: int
    schema: core.AttributeSchema
    requirements: Mapping[RequirementId, Requirement]
    documents: Mapping[str, SpecDocument]
    views: Mapping[str, StoredView]
    approvals: tuple[ApprovalRecord, ...]

    def canonical_json(self) -> str:
        """Canonical serialization of the full state, for durability checks."""
        data = {
            "as_of": self.as_of,
            "schema": core.schema_to_dict(self.schema),
            "requirements": [
                core.requirement_to_dict(self.requirements[rid], include_change_log=True)
                for rid in sorted(self.requirements)
            ],
            "documents": [
                docio.document_to_jsonable(self.documents[doc_id])
                for doc_id in sorted(self.documents)
            ],
            "views": [
                {
                    "name": name,
                    "owner": self.views[name].owner,
                    "query": querylang.print_query(self.views[name].query),
                }
                for name in sorted(self.views)
            ],
            "approvals": [workflows.approval_to_dict(a) for a in self.approvals],
        }
        return eventlog.canonical_json(data)


def empty_snapshot() -> Snapshot:
    return Snapshot(
        as_of=0,
        schema=core.default_schema(),
        requirements={},
        documents={},
        views={},
        approvals=(),
    )


def _value_from_jsonable(value: object) -> object:
    return tuple(value) if isinstance(value, list) else value


def apply_event(snapshot: Snapshot, event: Event) -> Snapshot:
    """Pure state transition; the live write path and replay share it, so a
    reloaded log always reproduces the live snapshot."""
    payload = event.payload
    kind = event.kind

    if kind == "SchemaConfigured":
        schema = core.schema_from_dict(payload["schema"])
        return replace(snapshot, as_of=event.seq, schema=schema)

    if kind == "RequirementCreated":
        rid = RequirementId.parse(payload["id"])
        req = Requirement(
            id=rid,
            text=payload["text"],
            attributes=core.attrs_from_jsonable(payload["attributes"]),
            revision=1,
            created_at=event.ts,
            created_by=event.actor,
            document=payload["document"],
            outline=payload.get("outline", ""),
        )
        requirements = dict(snapshot.requirements)
        requirements[rid] = req
        return replace(snapshot, as_of=event.seq, requirements=requirements)

    if kind == "RequirementUpdated":
        rid = RequirementId.parse(payload["id"])
        req = snapshot.requirements[rid]
        attrs = dict(req.attributes)
        text = req.text
        entries = []
        for change in payload["changes"]:
            f = change["field"]
            old = _value_from_jsonable(change["old"])
            new = _value_from_jsonable(change["new"])
            entries.append(core.ChangeLogEntry(event.ts, event.actor, f, old, new))
            if f == "text":
                text = new
            elif new is None:
                attrs.pop(f, None)
            else:
                attrs[f] = new
        updated = replace(
            req,
            text=text,
            attributes=attrs,
            revision=req.revision + len(entries),
            change_log=req.change_log + tuple(entries),
        )
        requirements = dict(snapshot.requirements)
        requirements[rid] = updated
        return replace(snapshot, as_of=event.seq, requirements=requirements)

    if kind == "DocumentImported":
        doc = docio.document_from_jsonable(payload)
        documents = dict(snapshot.documents)
        documents[doc.doc_id] = doc
        outlines = docio.outline_map(doc)
        requirements = dict(snapshot.requirements)
        for rid, outline in outlines.items():
            req = requirements[rid]
            if req.outline != outline:
                requirements[rid] = replace(req, outline=outline)
        # records dropped from the tree lose their position
        for rid, req in requirements.items():
            if req.document == doc.doc_id and rid not in outlines and req.outline:
                requirements[rid] = replace(req, outline="")
        return replace(
            snapshot, as_of=event.seq, requirements=requirements, documents=documents
        )

    if kind == "ViewSaved":
        views = dict(snapshot.views)
        views[payload["name"]] = StoredView(
            name=payload["name"],
            query=querylang.parse_query(payload["query"]),
            owner=payload["owner"],
        )
        return replace(snapshot, as_of=event.seq, views=views)

    if kind == "ApprovalRecorded":
        record = ApprovalRecord(
            requirement=RequirementId.parse(payload["requirement"]),
            approved_revision=payload["approved_revision"],
            verdict=payload["verdict"],
            subject=payload["subject"],
            actor=event.actor,
            timestamp=event.ts,
            note=payload.get("note"),
        )
        return replace(snapshot, as_of=event.seq, approvals=snapshot.approvals + (record,))

    raise ValueError(f"unknown event kind {kind!r}")


def replay(events: Iterable[Event]) -> Snapshot:
    """Fold the event sequence into a snapshot. Raises LogCorruptError naming
    the first event whose payload cannot be applied."""
    snapshot = empty_snapshot()
    for event in events:
        if event.seq != snapshot.as_of + 1:
            raise LogCorruptError(
                f"sequence gap: expected {snapshot.as_of + 1}, got {event.seq}", event.seq
            )
        try:
            snapshot = apply_event(snapshot, event)
        except LogCorruptError:
            raise
        except Exception as exc:
            raise LogCorruptError(f"event {event.seq} cannot be applied: {exc}", event.seq)
    return snapshot


def _check_actor(actor: str) -> None:
    if not isinstance(actor, str) or not actor.strip() or "\n" in actor:
        raise ValidationError(
            [Violation("illegal-value", "actor", "actor must be a non-empty single-line name")]
        )


class Store:
    """Repository handle. One Store instance per process per log file; reads
    return the latest committed immutable snapshot without blocking writes."""

    def __init__(
        self,
        events: list[Event] | None = None,
        path: "str | Path | None" = None,
        clock: Clock | None = None,
    ):
        self._path = Path(path) if path is not None else None
        self._clock = clock or core.now_utc
        self._events: list[Event] = list(events or [])
        self._snapshot = replay(self._events)
        self._mutex = threading.Lock()
        self._fh = None
        self._lock_path = self._path.with_name(self._path.name + ".lock") if self._path else None
        self._holds_lock = False

    # --- lifecycle -----------------------------------------------------------

    @classmethod
    def in_memory(cls, clock: Clock | None = None) -> "Store":
        return cls(clock=clock)

    @classmethod
    def init(cls, path: "str | Path", clock: Clock | None = None, actor: str = "system") -> "Store":
        """Create a new log file with the default schema. Fails if the file exists."""
        path = Path(path)
        if path.exists():
            raise ConflictError(f"{path} already exists")
        path.parent.mkdir(parents=True, exist_ok=True)
        store = cls(path=path, clock=clock)
        store.configure_schema(actor, core.default_schema())
        return store

    @classmethod
    def open(cls, path: "str | Path", clock: Clock | None = None) -> "Store":
        path = Path(path)
        if not path.exists():
            raise NotFoundError(f"no requirements database at {path} (run init first)")
        return cls(events=eventlog.read_log(path), path=path, clock=clock)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
        self._release_writer_lock()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # --- cross-process write lock ---------------------------------------------

    def acquire_writer_lock(self) -> None:
        """Take the pid lock file so no other process appends to this log."""
        if self._lock_path is None or self._holds_lock:
            return
        while True:
            try:
                fd = os.open(self._lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                holder = self._read_lock_holder()
                if holder is not None:
                    raise StoreLockedError(
                        f"{self._path} is locked by pid {holder} ({self._lock_path})"
                    )
                # stale lock from a dead process
                try:
                    self._lock_path.unlink()
                except FileNotFoundError:
                    pass
                continue
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            self._holds_lock = True
            return

    def _read_lock_holder(self) -> int | None:
        try:
            pid = int(self._lock_path.read_text().strip())
        except (FileNotFoundError, ValueError):
            return None
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return None
        except PermissionError:
            return pid
        return pid

    def _release_writer_lock(self) -> None:
        if self._holds_lock and self._lock_path is not None:
            try:
                self._lock_path.unlink()
            except FileNotFoundError:
                pass
            self._holds_lock = False

    # --- reads -----------------------------------------------------------------

    def snapshot(self) -> Snapshot:
        return self._snapshot

    def sequence(self) -> int:
        return self._snapshot.as_of

    def events(self) -> tuple[Event, ...]:
        return tuple(self._events)

    def snapshot_as_of(self, as_of: int) -> Snapshot:
        if not 0 <= as_of <= self._snapshot.as_of:
            raise NotFoundError(f"no event sequence {as_of}")
        if as_of == self._snapshot.as_of:
            return self._snapshot
        return replay(self._events[:as_of])

    def get_requirement(self, rid: RequirementId, as_of: int | None = None) -> Requirement:
        """Current record, or the record as of a historical event sequence."""
        snapshot = self._snapshot if as_of is None else self.snapshot_as_of(as_of)
        req = snapshot.requirements.get(rid)
        if req is None:
            raise NotFoundError(f"no requirement {rid}")
        return req

    # --- serialized write path ---------------------------------------------------

    def _commit(self, actor: str, batch: list[tuple[str, dict]], ts=None) -> Snapshot:
        """Append a batch of events atomically. Caller holds self._mutex."""
        if ts is None:
            ts = self._clock()
        snapshot = self._snapshot
        events = []
        seq = snapshot.as_of
        for kind, payload in batch:
            seq += 1
            events.append(Event(seq, ts, actor, kind, payload))
        for event in events:
            snapshot = apply_event(snapshot, event)
        if self._path is not None:
            self.acquire_writer_lock()
            if self._fh is None:
                self._fh = open(self._path, "a", encoding="utf-8")
            eventlog.write_events(self._fh, events)
            self._fh.flush()
            os.fsync(self._fh.fileno())
        self._events.extend(events)
        self._snapshot = snapshot
        return snapshot

    def create_requirement(
        self,
        actor: str,
        text: str,
        attrs: Mapping[str, object],
        document: str,
        outline: str = "",
    ) -> Requirement:
        """Append a new record with a fresh id, revision 1 and empty change log."""
        _check_actor(actor)
        with self._mutex:
            snapshot = self._snapshot
            if document not in snapshot.documents:
                raise NotFoundError(f"no document {document!r}")
            norm_text, bad = core.normalize_text(text)
            normalized = core.normalize_attributes(snapshot.schema, attrs)
            violations = ([bad] if bad else []) + core.validate_attributes(
                snapshot.schema, normalized
            )
            if violations:
                raise ValidationError(violations)
            rid = self._next_id(snapshot)
            payload = {
                "id": str(rid),
                "text": norm_text,
                "attributes": core.attrs_to_jsonable(normalized),
                "document": document,
                "outline": outline,
            }
            snapshot = self._commit(actor, [("RequirementCreated", payload)])
            return snapshot.requirements[rid]

    @staticmethod
    def _next_id(snapshot: Snapshot) -> RequirementId:
        # ids are never reused, and records are never deleted, so the highest
        # stored id is the highest ever issued
        highest = max((rid.value for rid in snapshot.requirements), default=0)
        return RequirementId(highest + 1)

    def update_requirement(
        self,
        actor: str,
        rid: RequirementId,
        expected_revision: int,
        changes: list[tuple[str, object]],
    ) -> Requirement:
        """Conditional update: applies only if the record is still at
        expected_revision, otherwise raises RevisionConflictError without
        writing. No-op change sets are absorbed (no event, same revision)."""
        _check_actor(actor)
        with self._mutex:
            snapshot = self._snapshot
            req = snapshot.requirements.get(rid)
            if req is None:
                raise NotFoundError(f"no requirement {rid}")
            if req.revision != expected_revision:
                raise RevisionConflictError(rid, req.revision)
            ts = self._clock()
            updated = core.apply_update(snapshot.schema, req, changes, actor, ts)
            if updated is req:
                return req
            payload = {
                "id": str(rid),
                "changes": [
                    {
                        "field": entry.field,
                        "old": core.attr_value_to_jsonable(entry.old_value),
                        "new": core.attr_value_to_jsonable(entry.new_value),
                    }
                    for entry in updated.change_log[len(req.change_log):]
                ],
            }
            snapshot = self._commit(actor, [("RequirementUpdated", payload)], ts=ts)
            return snapshot.requirements[rid]

    def configure_schema(self, actor: str, schema: core.AttributeSchema) -> None:
        """Replace the attribute schema. Rejected (naming the records) if any
        stored requirement would stop validating under the new schema."""
        _check_actor(actor)
        with self._mutex:
            snapshot = self._snapshot
            violations = []
            for rid in sorted(snapshot.requirements):
                req = snapshot.requirements[rid]
                violations.extend(
                    core.validate_attributes(schema, req.attributes, subject=str(rid))
                )
            if violations:
                raise ValidationError(violations)
            self._commit(
                actor, [("SchemaConfigured", {"schema": core.schema_to_dict(schema)})]
            )

    def save_view(self, actor: str, name: str, query: Query) -> StoredView:
        _check_actor(actor)
        if not name or "\n" in name:
            raise ValidationError(
                [Violation("illegal-value", "name", "view name must be a non-empty single line")]
            )
        with self._mutex:
            snapshot = self._snapshot
            violations = querylang.validate_query(query, snapshot.schema)
            if violations:
                raise querylang.QueryError(violations)
            existing = snapshot.views.get(name)
            if existing is not None and existing.owner != actor:
                raise ConflictError(f"view {name!r} is owned by {existing.owner!r}")
            snapshot = self._commit(
                actor,
                [("ViewSaved", {"name": name, "owner": actor, "query": querylang.print_query(query)})],
            )
            return snapshot.views[name]

    def record_approvals(
        self,
        actor: str,
        subject: str,
        results: list[tuple[RequirementId, str, "str | None"]],
        as_of: int | None = None,
    ) -> list[ApprovalOutcome]:
        """Append one ApprovalRecorded per item at the requirement's current
        revision. Items edited since the checklist's as_of are rejected as
        stale, unknown ids as unknown; the rest are still recorded."""
        _check_actor(actor)
        if not subject:
            raise ValidationError(
                [Violation("illegal-value", "subject", "approval subject must be non-empty")]
            )
        for _, verdict, _ in results:
            if verdict not in workflows.VERDICTS:
                raise ValidationError(
                    [
                        Violation(
                            "illegal-value",
                            "verdict",
                            f"verdict must be one of {', '.join(workflows.VERDICTS)}",
                        )
                    ]
                )
        with self._mutex:
            snapshot = self._snapshot
            if as_of is None:
                as_of = snapshot.as_of
            historical = self.snapshot_as_of(as_of)
            outcomes: list[ApprovalOutcome] = []
            batch: list[tuple[str, dict]] = []
            recorded_idx: list[int] = []
            for rid, verdict, note in results:
                req = snapshot.requirements.get(rid)
                if req is None:
                    outcomes.append(
                        ApprovalOutcome(rid, "unknown", detail=f"no requirement {rid}")
                    )
                    continue
                past = historical.requirements.get(rid)
                if past is None or past.revision != req.revision:
                    outcomes.append(
                        ApprovalOutcome(
                            rid,
                            "stale",
                            detail="checklist stale, regenerate",
                            current_revision=req.revision,
                        )
                    )
                    continue
                batch.append(
                    (
                        "ApprovalRecorded",
                        {
                            "requirement": str(rid),
                            "approved_revision": req.revision,
                            "verdict": verdict,
                            "subject": subject,
                            "note": note,
                        },
                    )
                )
                recorded_idx.append(len(outcomes))
                outcomes.append(ApprovalOutcome(rid, "recorded"))
            if batch:
                snapshot = self._commit(actor, batch)
                new_records = snapshot.approvals[-len(batch):]
                for index, record in zip(recorded_idx, new_records):
                    outcomes[index] = replace(
                        outcomes[index], approval=record, current_revision=record.approved_revision
                    )
            return outcomes

    # --- document synchronization -------------------------------------------------

    def import_document(self, actor: str, doc_id: str, source_text: str) -> ImportReport:
        """Synchronize one parsed source document into the store.

        Blocks without id create records; id= blocks update their record
        (no-ops absorbed); per-block validation failures are reported and the
        rest of the import proceeds. The document tree is replaced and
        outlines renumbered. Syntax errors abort before anything is written.
        """
        _check_actor(actor)
        if not doc_id or not all(c.isalnum() or c in "_.-" for c in doc_id):
            raise ValidationError(
                [Violation("illegal-value", "document", f"bad document id {doc_id!r}")]
            )
        parsed = docio.parse_document(source_text)
        if parsed.doc_id is not None and parsed.doc_id != doc_id:
            raise DocumentSyntaxError(
                f"#document {parsed.doc_id!r} does not match the import target {doc_id!r}", 1
            )
        with self._mutex:
            snapshot = self._snapshot
            schema = snapshot.schema
            group = parsed.group
            gdef = schema.get("group")
            if gdef is None:
                raise ValidationError(
                    [Violation("unknown-attribute", "group", "schema has no group attribute")]
                )
            if gdef.allowed_values and group not in gdef.allowed_values:
                raise ValidationError(
                    [Violation("illegal-value", "group", f"unknown group value {group!r}")]
                )

            report = ImportReport(doc_id)
            ts = self._clock()
            batch: list[tuple[str, dict]] = []
            next_id = self._next_id(snapshot).value

            def fail_subtree(build_node: docio.BuildNode, reason: str) -> None:
                report.failed.append((build_node.block.line, reason))
                for child in build_node.children:
                    fail_subtree(child, f"parent block at line {build_node.block.line} failed")

            def process_block(block: docio.ParsedBlock) -> RequirementId | None:
                nonlocal next_id
                if block.rid is None:
                    raw: dict[str, object] = dict(block.attrs)
                    raw.setdefault("group", group)
                    normalized = core.normalize_attributes(schema, raw)
                    if normalized.get("group") != group:
                        report.failed.append(
                            (block.line, f"block group differs from document group {group!r}")
                        )
                        return None
                    text, bad = core.normalize_text(block.text)
                    violations = ([bad] if bad else []) + core.validate_attributes(
                        schema, normalized
                    )
                    if violations:
                        report.failed.append(
                            (block.line, "; ".join(str(v) for v in violations))
                        )
                        return None
                    rid = RequirementId(next_id)
                    next_id += 1
                    batch.append(
                        (
                            "RequirementCreated",
                            {
                                "id": str(rid),
                                "text": text,
                                "attributes": core.attrs_to_jsonable(normalized),
                                "document": doc_id,
                                "outline": "",
                            },
                        )
                    )
                    report.created.append(rid)
                    return rid

                req = snapshot.requirements.get(block.rid)
                if req is None:
                    report.failed.append((block.line, f"unknown id {block.rid}"))
                    return None
                if req.document != doc_id:
                    report.failed.append(
                        (block.line, f"{block.rid} belongs to document {req.document!r}")
                    )
                    return None
                changes: list[tuple[str, object]] = [("text", block.text)]
                explicit_group = False
                for name, values in block.attrs.items():
                    changes.append((name, values))
                    if name == "group":
                        explicit_group = True
                if not explicit_group:
                    changes.append(("group", group))
                try:
                    updated = core.apply_update(schema, req, changes, actor, ts)
                except ValidationError as exc:
                    report.failed.append((block.line, str(exc)))
                    return None
                if updated.attributes.get("group") != group:
                    report.failed.append(
                        (block.line, f"block group differs from document group {group!r}")
                    )
                    return None
                if updated is req:
                    report.unchanged.append(block.rid)
                else:
                    batch.append(
                        (
                            "RequirementUpdated",
                            {
                                "id": str(block.rid),
                                "changes": [
                                    {
                                        "field": e.field,
                                        "old": core.attr_value_to_jsonable(e.old_value),
                                        "new": core.attr_value_to_jsonable(e.new_value),
                                    }
                                    for e in updated.change_log[len(req.change_log):]
                                ],
                            },
                        )
                    )
                    report.updated.append(block.rid)
                return block.rid

            def build(nodes: list[docio.BuildNode]) -> tuple[docio.DocNode, ...]:
                out = []
                for bn in nodes:
                    if bn.kind == docio.HEADING:
                        out.append(
                            docio.DocNode(
                                docio.HEADING,
                                text=bn.text,
                                level=bn.level,
                                children=build(bn.children),
                            )
                        )
                    elif bn.kind == docio.PROSE:
                        out.append(docio.DocNode(docio.PROSE, text=bn.text))
                    else:
                        rid = process_block(bn.block)
                        if rid is None:
                            for child in bn.children:
                                fail_subtree(
                                    child, f"parent block at line {bn.block.line} failed"
                                )
                            continue
                        out.append(
                            docio.DocNode(
                                docio.REQUIREMENT, rid=rid, children=build(bn.children)
                            )
                        )
                return tuple(out)

            nodes = build(parsed.roots)
            doc = SpecDocument(
                doc_id=doc_id,
                title=parsed.title or doc_id,
                owning_group=group,
                nodes=nodes,
            )
            batch.append(("DocumentImported", docio.document_to_jsonable(doc)))
            self._commit(actor, batch, ts=ts)
            report.canonical_source = docio.export_document(self._snapshot, doc_id)
            return report

"""reqbase: a collaborative requirements database.

Stores requirement paragraphs from independently authored specification
documents as individually versioned, metadata-tagged records; supports
cross-group retrieval, per-building design-specification assembly, HTML
publication, and an approval-checklist workflow that detects post-approval
modifications.
"""

from .core import (
    AttributeDef,
    AttributeSchema,
    ChangeLogEntry,
    ConflictError,
    NotFoundError,
    ReqbaseError,
    Requirement,
    RequirementId,
    ValidationError,
    Violation,
    apply_update,
    default_schema,
    validate_attributes,
)
from .docio import DocNode, ImportReport, SpecDocument
from .eventlog import Event, LogCorruptError
from .query import Query, QueryParseError, StoredView, evaluate, parse_query, print_query
from .store import RevisionConflictError, Snapshot, Store, replay
from .workflows import (
    ApprovalRecord,
    Checklist,
    StatusReport,
    approval_status_report,
    find_external_requirements,
    find_stale_approvals,
    generate_checklist,
    generate_design_spec,
    record_approval,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeDef",
    "AttributeSchema",
    "ApprovalRecord",
    "ChangeLogEntry",
    "Checklist",
    "ConflictError",
    "DocNode",
    "Event",
    "ImportReport",
    "LogCorruptError",
    "NotFoundError",
    "Query",
    "QueryParseError",
    "ReqbaseError",
    "Requirement",
    "RequirementId",
    "RevisionConflictError",
    "Snapshot",
    "SpecDocument",
    "StatusReport",
    "Store",
    "StoredView",
    "ValidationError",
    "Violation",
    "apply_update",
    "approval_status_report",
    "default_schema",
    "evaluate",
    "find_external_requirements",
    "find_stale_approvals",
    "generate_checklist",
    "generate_design_spec",
    "parse_query",
    "print_query",
    "record_approval",
    "replay",
    "validate_attributes",
]

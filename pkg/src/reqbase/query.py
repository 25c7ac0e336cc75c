"""Predicate language over requirement records and stored views.

A query is a conjunction of clauses plus an ordering. Textual form, one term
per clause, whitespace separated (grammar file: docs/query_grammar.md):

    name=value            exact match (enum-single, text, date attributes)
    name~value            set membership (enum-multi attributes)
    text~value            case-insensitive substring over the paragraph
    group!=value          authoring group is not value
    modified>timestamp    last modification strictly after the ISO timestamp
    sort:field:asc|desc   ordering (default sort:id:asc)

Values containing spaces or quotes are double-quoted; \\" and \\\\ escape.
Evaluation is a pure full scan over an immutable snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import TYPE_CHECKING, Iterable

from . import core
from .core import NotFoundError, ReqbaseError, Requirement, ValidationError, Violation

if TYPE_CHECKING:  # pragma: no cover
    from .store import Snapshot, Store


class QueryParseError(ReqbaseError):
    """Syntax error in the textual query form. position is a 1-based column."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} (at column {position})")


class QueryError(ValidationError):
    """Query does not fit the schema (unknown attribute, illegal value, wrong kind)."""


# --- clauses ----------------------------------------------------------------

@dataclass(frozen=True)
class AttrEquals:
    name: str
    value: str


@dataclass(frozen=True)
class AttrContains:
    name: str
    value: str


@dataclass(frozen=True)
class TextContains:
    value: str


@dataclass(frozen=True)
class GroupIsNot:
    value: str


@dataclass(frozen=True)
class ModifiedAfter:
    when: datetime


Clause = "AttrEquals | AttrContains | TextContains | GroupIsNot | ModifiedAfter"


def group_is(value: str) -> AttrEquals:
    return AttrEquals("group", value)


def status_is(value: str) -> AttrEquals:
    return AttrEquals("status", value)


@dataclass(frozen=True)
class OrderBy:
    field: str = "id"
    ascending: bool = True


@dataclass(frozen=True)
class Query:
    clauses: tuple = ()
    order: OrderBy = field(default_factory=OrderBy)


@dataclass(frozen=True)
class StoredView:
    """A named saved query; results are recomputed on every access."""

    name: str
    query: Query
    owner: str


# --- parsing ----------------------------------------------------------------

_NAME_CHARS = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.-")
_OPERATOR_STARTS = "=~!><"
_SORT_FIELDS = ("id", "text", "document", "outline", "created_at", "modified", "revision")


def _read_value(text: str, i: int) -> tuple[str, int]:
    """Read one value starting at i; returns (value, next index). 1-based errors."""
    n = len(text)
    if i >= n or text[i].isspace():
        raise QueryParseError("expected a value", i + 1)
    if text[i] == '"':
        i += 1
        out = []
        while i < n:
            c = text[i]
            if c == "\\":
                if i + 1 >= n or text[i + 1] not in '"\\':
                    raise QueryParseError("bad escape in quoted value", i + 1)
                out.append(text[i + 1])
                i += 2
                continue
            if c == '"':
                i += 1
                if i < n and not text[i].isspace():
                    raise QueryParseError("unexpected text after closing quote", i + 1)
                return "".join(out), i
            out.append(c)
            i += 1
        raise QueryParseError("unterminated quoted value", n + 1)
    if text[i] in _OPERATOR_STARTS:
        raise QueryParseError(f"unexpected {text[i]!r}, expected a value", i + 1)
    start = i
    while i < n and not text[i].isspace():
        if text[i] == '"':
            raise QueryParseError("quotes may only wrap a whole value", i + 1)
        i += 1
    return text[start:i], i


def parse_query(text: str) -> Query:
    """Parse the textual query form; total over the grammar.

    Unknown attributes are reported at evaluation time, not here.
    """
    clauses: list[object] = []
    order: OrderBy | None = None
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        start = i
        while i < n and text[i] in _NAME_CHARS:
            i += 1
        name = text[start:i]
        if not name:
            raise QueryParseError(f"unexpected {text[i]!r}", i + 1)

        if name == "sort" and i < n and text[i] == ":":
            rest_start = i + 1
            j = rest_start
            while j < n and not text[j].isspace():
                j += 1
            parts = text[rest_start:j].split(":")
            if len(parts) != 2 or not parts[0] or parts[1] not in ("asc", "desc"):
                raise QueryParseError("sort term must be sort:field:asc|desc", start + 1)
            if order is not None:
                raise QueryParseError("duplicate sort term", start + 1)
            order = OrderBy(parts[0], parts[1] == "asc")
            i = j
            continue

        if i >= n:
            raise QueryParseError(f"term {name!r} is missing an operator", i + 1)
        if text.startswith("!=", i):
            if name != "group":
                raise QueryParseError("!= is only supported for group", i + 1)
            value, i = _read_value(text, i + 2)
            clauses.append(GroupIsNot(value))
        elif text[i] == ">":
            if name != "modified":
                raise QueryParseError("> is only supported for modified", i + 1)
            value_pos = i + 1
            value, i = _read_value(text, value_pos)
            try:
                when = core.ts_from_str(value)
            except ValueError:
                raise QueryParseError("modified> takes an ISO-8601 UTC timestamp", value_pos + 1)
            clauses.append(ModifiedAfter(when))
        elif text[i] == "=":
            value, i = _read_value(text, i + 1)
            clauses.append(AttrEquals(name, value))
        elif text[i] == "~":
            value, i = _read_value(text, i + 1)
            if name == "text":
                clauses.append(TextContains(value))
            else:
                clauses.append(AttrContains(name, value))
        else:
            raise QueryParseError(f"expected an operator after {name!r}", i + 1)
    return Query(tuple(clauses), order or OrderBy())


def _quote_needed(value: str) -> bool:
    if value == "":
        return True
    if any(c.isspace() or c in '"\\' for c in value):
        return True
    return value[0] in _OPERATOR_STARTS


def _format_value(value: str) -> str:
    if not _quote_needed(value):
        return value
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def print_query(query: Query) -> str:
    """Canonical textual form; parse_query(print_query(q)) == q."""
    terms = []
    for clause in query.clauses:
        if isinstance(clause, AttrEquals):
            terms.append(f"{clause.name}={_format_value(clause.value)}")
        elif isinstance(clause, AttrContains):
            terms.append(f"{clause.name}~{_format_value(clause.value)}")
        elif isinstance(clause, TextContains):
            terms.append(f"text~{_format_value(clause.value)}")
        elif isinstance(clause, GroupIsNot):
            terms.append(f"group!={_format_value(clause.value)}")
        elif isinstance(clause, ModifiedAfter):
            terms.append(f"modified>{core.ts_to_str(clause.when)}")
        else:
            raise TypeError(f"unknown clause {clause!r}")
    if query.order != OrderBy():
        direction = "asc" if query.order.ascending else "desc"
        terms.append(f"sort:{query.order.field}:{direction}")
    return " ".join(terms)


# --- validation and evaluation ----------------------------------------------

def validate_query(query: Query, schema: core.AttributeSchema) -> list[Violation]:
    """Clause attribute names must exist in the schema with a matching kind;
    clause values must be legal for closed value lists."""
    violations: list[Violation] = []

    def check_enum_value(name: str, value: str) -> None:
        adef = schema.get(name)
        if adef is not None and adef.allowed_values and value not in adef.allowed_values:
            violations.append(
                Violation("illegal-value", name, f"{name}: {value!r} is not in the value list")
            )

    for clause in query.clauses:
        if isinstance(clause, AttrEquals):
            adef = schema.get(clause.name)
            if adef is None:
                violations.append(
                    Violation("unknown-attribute", clause.name, f"unknown attribute {clause.name!r}")
                )
            elif adef.kind == core.ENUM_MULTI:
                violations.append(
                    Violation(
                        "wrong-cardinality",
                        clause.name,
                        f"{clause.name} is multi-valued, use {clause.name}~value",
                    )
                )
            else:
                check_enum_value(clause.name, clause.value)
        elif isinstance(clause, AttrContains):
            adef = schema.get(clause.name)
            if adef is None:
                violations.append(
                    Violation("unknown-attribute", clause.name, f"unknown attribute {clause.name!r}")
                )
            elif adef.kind != core.ENUM_MULTI:
                violations.append(
                    Violation(
                        "wrong-cardinality",
                        clause.name,
                        f"{clause.name} is single-valued, use {clause.name}=value",
                    )
                )
            else:
                check_enum_value(clause.name, clause.value)
        elif isinstance(clause, GroupIsNot):
            if schema.get("group") is None:
                violations.append(
                    Violation("unknown-attribute", "group", "schema has no group attribute")
                )
            else:
                check_enum_value("group", clause.value)
    sort_field = query.order.field
    if sort_field not in _SORT_FIELDS and schema.get(sort_field) is None:
        violations.append(
            Violation("unknown-attribute", sort_field, f"unknown sort field {sort_field!r}")
        )
    return violations


def _matches(clause: object, req: Requirement) -> bool:
    if isinstance(clause, AttrEquals):
        return req.attributes.get(clause.name) == clause.value
    if isinstance(clause, AttrContains):
        return clause.value in req.multi(clause.name)
    if isinstance(clause, TextContains):
        return clause.value.lower() in req.text.lower()
    if isinstance(clause, GroupIsNot):
        return req.attributes.get("group") != clause.value
    if isinstance(clause, ModifiedAfter):
        return req.modified_at > clause.when
    raise TypeError(f"unknown clause {clause!r}")


def outline_key(outline: str) -> tuple[int, ...]:
    """Numeric sort key for dotted outline positions ("2.10" after "2.9")."""
    if not outline:
        return ()
    try:
        return tuple(int(p) for p in outline.split("."))
    except ValueError:
        return ()


def sort_requirements(
    records: Iterable[Requirement], order: OrderBy
) -> list[Requirement]:
    by_id = sorted(records, key=lambda r: r.id)
    if order.field == "id":
        return by_id if order.ascending else list(reversed(by_id))

    def key(req: Requirement):
        f = order.field
        if f == "text":
            return req.text
        if f == "document":
            return req.document
        if f == "outline":
            return outline_key(req.outline)
        if f == "created_at":
            return req.created_at
        if f == "modified":
            return req.modified_at
        if f == "revision":
            return req.revision
        value = req.attributes.get(f)
        if value is None:
            return ""
        return ", ".join(value) if isinstance(value, tuple) else value

    # sorted() is stable, so equal keys keep their id-ascending order
    # in both directions.
    return sorted(by_id, key=key, reverse=not order.ascending)


def evaluate(query: Query, snapshot: "Snapshot") -> list[Requirement]:
    """All records satisfying every clause, in the requested order.

    Semantically a naive full scan; raises QueryError if a clause does not
    fit the snapshot's schema.
    """
    violations = validate_query(query, snapshot.schema)
    if violations:
        raise QueryError(violations)
    matched = [
        req
        for req in snapshot.requirements.values()
        if all(_matches(c, req) for c in query.clauses)
    ]
    return sort_requirements(matched, query.order)


# --- stored views -----------------------------------------------------------

def save_view(store: "Store", actor: str, name: str, query: Query | str) -> StoredView:
    """Save (or, for the same owner, replace) a named view."""
    if isinstance(query, str):
        query = parse_query(query)
    return store.save_view(actor, name, query)


def list_views(snapshot: "Snapshot") -> list[StoredView]:
    return [snapshot.views[name] for name in sorted(snapshot.views)]


def run_view(name: str, snapshot: "Snapshot") -> list[Requirement]:
    view = snapshot.views.get(name)
    if view is None:
        raise NotFoundError(f"no view named {name!r}")
    return evaluate(view.query, snapshot)

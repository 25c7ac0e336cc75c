"""Domain types shared by every module: attribute schema, requirement records,
attribute validation, and the pure revision-transition logic.

All types here are immutable values. Mutation is functional: operations return
new records and never touch their inputs, so records and schemas can be shared
freely between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from typing import Iterable, Mapping

ENUM_SINGLE = "enum-single"
ENUM_MULTI = "enum-multi"
TEXT = "text"
DATE = "date"
ATTRIBUTE_KINDS = (ENUM_SINGLE, ENUM_MULTI, TEXT, DATE)

# Attribute names appear on document lines ("name: value") and in query
# strings ("name=value"), so the charset is restricted. "text" is reserved
# for the requirement paragraph itself.
_ATTR_NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
_ID_RE = re.compile(r"^R([1-9][0-9]*)$")

# Stored attribute values: enum-single/text/date hold a string, enum-multi a
# sorted tuple of strings (set semantics with a canonical order).


class ReqbaseError(Exception):
    """Base class for all domain errors."""


class NotFoundError(ReqbaseError):
    pass


class ConflictError(ReqbaseError):
    pass


@dataclass(frozen=True)
class Violation:
    """One attribute-validation failure.

    code is one of: unknown-attribute, illegal-value, wrong-cardinality,
    missing-required. subject optionally names the offending record when the
    violation is reported for stored data (schema migration checks).
    """

    code: str
    attribute: str
    message: str
    subject: str = ""

    def __str__(self) -> str:
        prefix = f"{self.subject}: " if self.subject else ""
        return f"{prefix}{self.message}"


class ValidationError(ReqbaseError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True, order=True)
class RequirementId:
    """Database-wide identifier, rendered as "R" + decimal (R234).

    Assigned once at creation, never reused, strictly increasing in creation
    order within one repository.
    """

    value: int

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or self.value < 1:
            raise ValueError(f"requirement id must be a positive integer, got {self.value!r}")

    def __str__(self) -> str:
        return f"R{self.value}"

    @classmethod
    def parse(cls, text: str) -> "RequirementId":
        m = _ID_RE.match(text.strip())
        if not m:
            raise ValueError(f"not a requirement id: {text!r} (expected R<number>)")
        return cls(int(m.group(1)))


@dataclass(frozen=True)
class AttributeDef:
    """One configurable metadata attribute.

    For enum kinds an empty allowed_values list means the value list has not
    been configured yet and any non-empty value is accepted; a non-empty list
    is closed and membership is enforced.
    """

    name: str
    kind: str
    allowed_values: tuple[str, ...] = ()
    required: bool = False
    default: str | None = None

    def __post_init__(self) -> None:
        if not _ATTR_NAME_RE.match(self.name):
            raise ValueError(f"bad attribute name {self.name!r} (allowed: letters, digits, _.-)")
        if self.name == "text":
            raise ValueError('"text" is reserved for the requirement paragraph')
        if self.kind not in ATTRIBUTE_KINDS:
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        object.__setattr__(self, "allowed_values", tuple(self.allowed_values))
        if self.kind not in (ENUM_SINGLE, ENUM_MULTI) and self.allowed_values:
            raise ValueError(f"{self.name}: only enum kinds take a value list")
        if len(set(self.allowed_values)) != len(self.allowed_values):
            raise ValueError(f"{self.name}: duplicate values in value list")
        if any(not v or "\n" in v or "\r" in v for v in self.allowed_values):
            raise ValueError(f"{self.name}: allowed values must be non-empty single-line strings")
        if self.default is not None:
            if self.kind == ENUM_MULTI:
                raise ValueError(f"{self.name}: defaults are only supported for single-valued kinds")
            if self.allowed_values and self.default not in self.allowed_values:
                raise ValueError(f"{self.name}: default {self.default!r} not in value list")

    @property
    def open_list(self) -> bool:
        return self.kind in (ENUM_SINGLE, ENUM_MULTI) and not self.allowed_values


@dataclass(frozen=True)
class AttributeSchema:
    attributes: tuple[AttributeDef, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")

    def get(self, name: str) -> AttributeDef | None:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def __iter__(self):
        return iter(self.attributes)


def default_schema() -> AttributeSchema:
    """The shipped default schema.

    Building/location/group value lists start empty (open) and are
    project-configured via configure_schema.
    """
    return AttributeSchema(
        (
            AttributeDef(
                "type",
                ENUM_MULTI,
                ("usage", "technical infrastructure", "floor space", "safety", "cost"),
            ),
            AttributeDef("group", ENUM_SINGLE),
            AttributeDef("building", ENUM_MULTI),
            AttributeDef("location", ENUM_MULTI),
            AttributeDef(
                "phase",
                ENUM_SINGLE,
                ("construction", "installation", "operation", "maintenance"),
            ),
            AttributeDef(
                "status",
                ENUM_SINGLE,
                ("in progress", "approved", "rejected"),
                required=True,
                default="in progress",
            ),
        )
    )


def _is_str_list(value: object) -> bool:
    return isinstance(value, (list, tuple, set, frozenset)) and all(
        isinstance(v, str) for v in value
    )


def normalize_attributes(
    schema: AttributeSchema, attrs: Mapping[str, object]
) -> dict[str, object]:
    """Bring raw attribute input into canonical shape and apply defaults.

    Multi values become sorted duplicate-free tuples; an empty multi value is
    dropped (absent and empty are one state). Single-valued kinds accept a
    one-element list as convenience. Absent attributes with a schema default
    get the default. Shapes that cannot be coerced are left as given so that
    validate_attributes can report them.
    """
    out: dict[str, object] = {}
    for name, value in attrs.items():
        adef = schema.get(name)
        if adef is None:
            out[name] = value
            continue
        if adef.kind == ENUM_MULTI:
            if isinstance(value, str):
                value = (value,)
            if _is_str_list(value):
                values = tuple(sorted(set(value)))
                if values:
                    out[name] = values
                continue
            out[name] = value
        else:
            if _is_str_list(value) and len(value) == 1:
                value = list(value)[0]
            out[name] = value
    for adef in schema:
        if adef.default is not None and adef.name not in out:
            out[adef.name] = adef.default
    return out


def _check_value(adef: AttributeDef, value: object) -> Violation | None:
    name = adef.name
    if adef.kind == ENUM_MULTI:
        if not _is_str_list(value):
            return Violation(
                "wrong-cardinality", name, f"{name} takes a list of values, got {value!r}"
            )
        for v in value:
            if bad := _check_scalar(adef, v):
                return bad
        return None
    if not isinstance(value, str):
        return Violation(
            "wrong-cardinality", name, f"{name} takes exactly one value, got {value!r}"
        )
    return _check_scalar(adef, value)


def _check_scalar(adef: AttributeDef, v: str) -> Violation | None:
    name = adef.name
    if not v or "\n" in v or "\r" in v:
        return Violation("illegal-value", name, f"{name}: values must be non-empty single-line strings")
    if adef.kind in (ENUM_SINGLE, ENUM_MULTI):
        if adef.allowed_values and v not in adef.allowed_values:
            return Violation(
                "illegal-value",
                name,
                f"{name}: {v!r} is not in the value list ({', '.join(adef.allowed_values)})",
            )
    elif adef.kind == DATE:
        try:
            date.fromisoformat(v)
        except ValueError:
            return Violation("illegal-value", name, f"{name}: {v!r} is not an ISO date (YYYY-MM-DD)")
    return None


def validate_attributes(
    schema: AttributeSchema, attrs: Mapping[str, object], subject: str = ""
) -> list[Violation]:
    """Check an attribute map against the schema. Returns violations, [] if ok.

    Never raises: unknown attribute, illegal value, wrong cardinality and
    missing required attributes are all reported as Violation entries.
    """
    violations: list[Violation] = []
    for name, value in attrs.items():
        adef = schema.get(name)
        if adef is None:
            violations.append(
                Violation("unknown-attribute", name, f"unknown attribute {name!r}", subject)
            )
            continue
        if bad := _check_value(adef, value):
            violations.append(replace(bad, subject=subject))
    for adef in schema:
        if adef.required and adef.name not in attrs:
            violations.append(
                Violation(
                    "missing-required",
                    adef.name,
                    f"required attribute {adef.name!r} is missing",
                    subject,
                )
            )
    return violations


def normalize_text(text: str) -> tuple[str, Violation | None]:
    """Canonicalize a requirement paragraph.

    Carriage returns and blank interior lines are rejected (the document
    format delimits blocks with blank lines), surrounding whitespace and
    per-line trailing whitespace are stripped.
    """
    if not isinstance(text, str):
        return "", Violation("illegal-value", "text", "text must be a string")
    if "\r" in text:
        return "", Violation("illegal-value", "text", "text must not contain carriage returns")
    lines = [line.rstrip() for line in text.strip().split("\n")]
    if not lines or any(not line.strip() for line in lines):
        return "", Violation("illegal-value", "text", "text must be a non-empty paragraph without blank lines")
    return "\n".join(lines), None


@dataclass(frozen=True)
class ChangeLogEntry:
    """One field-level modification. old/new are None for added/removed attributes."""

    timestamp: datetime
    actor: str
    field: str
    old_value: object
    new_value: object


@dataclass(frozen=True)
class Requirement:
    """One versioned requirement record (a single specification paragraph).

    Invariant: revision == 1 + len(change_log). The attributes dict is never
    mutated after construction.
    """

    id: RequirementId
    text: str
    attributes: dict[str, object]
    revision: int
    created_at: datetime
    created_by: str
    document: str
    outline: str
    change_log: tuple[ChangeLogEntry, ...] = ()

    @property
    def modified_at(self) -> datetime:
        return self.change_log[-1].timestamp if self.change_log else self.created_at

    def attr(self, name: str) -> object:
        return self.attributes.get(name)

    def multi(self, name: str) -> tuple[str, ...]:
        value = self.attributes.get(name, ())
        return value if isinstance(value, tuple) else (value,)


def apply_update(
    schema: AttributeSchema,
    req: Requirement,
    changes: Iterable[tuple[str, object]],
    actor: str,
    timestamp: datetime,
) -> Requirement:
    """Pure revision transition.

    Applies (field, new_value) pairs in order; field is "text" or an attribute
    name, a new_value of None removes the attribute. Effective changes (new
    differs from old) each append one change-log entry and advance the
    revision by one, preserving revision == 1 + len(change_log) for every
    reachable record. If every change is a no-op the input record is returned
    unchanged (same object, same revision).

    Raises ValidationError when a field name is unknown, a value violates the
    schema, a required attribute would be removed, or text would become empty.
    """
    text = req.text
    attrs = dict(req.attributes)
    entries: list[ChangeLogEntry] = []
    violations: list[Violation] = []

    for field_name, raw in changes:
        if field_name == "text":
            if raw is None:
                violations.append(Violation("illegal-value", "text", "text cannot be removed"))
                continue
            new_text, bad = normalize_text(raw)  # type: ignore[arg-type]
            if bad:
                violations.append(bad)
                continue
            if new_text != text:
                entries.append(ChangeLogEntry(timestamp, actor, "text", text, new_text))
                text = new_text
            continue

        adef = schema.get(field_name)
        if adef is None:
            violations.append(
                Violation("unknown-attribute", field_name, f"unknown field {field_name!r}")
            )
            continue
        old = attrs.get(field_name)
        if raw is None:
            new = None
        else:
            new = normalize_attributes(schema, {field_name: raw}).get(field_name)
        if new is not None and (bad := _check_value(adef, new)):
            violations.append(bad)
            continue
        if new == old:
            continue
        entries.append(ChangeLogEntry(timestamp, actor, field_name, old, new))
        if new is None:
            attrs.pop(field_name, None)
        else:
            attrs[field_name] = new

    # Required attributes may not end up missing (e.g. removed above).
    for adef in schema:
        if adef.required and adef.name not in attrs:
            violations.append(
                Violation("missing-required", adef.name, f"required attribute {adef.name!r} is missing")
            )
    if violations:
        raise ValidationError(violations)
    if not entries:
        return req
    return replace(
        req,
        text=text,
        attributes=attrs,
        revision=req.revision + len(entries),
        change_log=req.change_log + tuple(entries),
    )


# --- timestamps ------------------------------------------------------------

def now_utc() -> datetime:
    """Current time, UTC, second precision (the stored granularity)."""
    return datetime.now(timezone.utc).replace(microsecond=0)


def ts_to_str(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


def ts_from_str(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


# --- canonical dict shapes (events, API responses, snapshot hashing) -------

def attr_value_to_jsonable(value: object) -> object:
    if isinstance(value, tuple):
        return list(value)
    return value


def attrs_to_jsonable(attrs: Mapping[str, object]) -> dict[str, object]:
    return {k: attr_value_to_jsonable(v) for k, v in sorted(attrs.items())}


def attrs_from_jsonable(data: Mapping[str, object]) -> dict[str, object]:
    out: dict[str, object] = {}
    for k, v in data.items():
        out[k] = tuple(v) if isinstance(v, list) else v
    return out


def schema_to_dict(schema: AttributeSchema) -> dict[str, object]:
    return {
        "attributes": [
            {
                "name": a.name,
                "kind": a.kind,
                "allowed_values": list(a.allowed_values),
                "required": a.required,
                "default": a.default,
            }
            for a in schema
        ]
    }


def schema_from_dict(data: Mapping[str, object]) -> AttributeSchema:
    defs = []
    for item in data["attributes"]:  # type: ignore[index]
        defs.append(
            AttributeDef(
                name=item["name"],
                kind=item["kind"],
                allowed_values=tuple(item.get("allowed_values", ())),
                required=bool(item.get("required", False)),
                default=item.get("default"),
            )
        )
    return AttributeSchema(tuple(defs))


def change_entry_to_dict(entry: ChangeLogEntry) -> dict[str, object]:
    return {
        "timestamp": ts_to_str(entry.timestamp),
        "actor": entry.actor,
        "field": entry.field,
        "old": attr_value_to_jsonable(entry.old_value),
        "new": attr_value_to_jsonable(entry.new_value),
    }


def requirement_to_dict(req: Requirement, include_change_log: bool = False) -> dict[str, object]:
    out: dict[str, object] = {
        "id": str(req.id),
        "text": req.text,
        "attributes": attrs_to_jsonable(req.attributes),
        "revision": req.revision,
        "created_at": ts_to_str(req.created_at),
        "created_by": req.created_by,
        "document": req.document,
        "outline": req.outline,
        "modified_at": ts_to_str(req.modified_at),
    }
    if include_change_log:
        out["change_log"] = [change_entry_to_dict(e) for e in req.change_log]
    return out

"""Append-only event log file: one event per line in a canonical text encoding.

Line layout (docs/log_format.md):

    <checksum> <canonical-json>\\n

where canonical-json is the event envelope {"actor", "kind", "payload", "seq",
"ts"} serialized with sorted keys, compact separators and raw UTF-8, and
checksum is the first 8 hex digits of the SHA-256 of the JSON text. The
checksum detects truncation and bit rot per line; sequence numbers must be
gap-free from 1. Events are never rewritten.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable

from . import core
from .core import ReqbaseError

EVENT_KINDS = (
    "SchemaConfigured",
    "RequirementCreated",
    "RequirementUpdated",
    "DocumentImported",
    "ViewSaved",
    "ApprovalRecorded",
)


class LogCorruptError(ReqbaseError):
    """The log file cannot be loaded. line names the first bad line/event."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class Event:
    """One appended fact. sequence is gap-free from 1; an event once written
    is never altered."""

    seq: int
    ts: datetime
    actor: str
    kind: str
    payload: dict


def canonical_json(data: object) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _checksum(body: str) -> str:
    return hashlib.sha256(body.encode("utf-8")).hexdigest()[:8]


def encode_event(event: Event) -> str:
    body = canonical_json(
        {
            "seq": event.seq,
            "ts": core.ts_to_str(event.ts),
            "actor": event.actor,
            "kind": event.kind,
            "payload": event.payload,
        }
    )
    return f"{_checksum(body)} {body}\n"


def decode_line(line: str, line_no: int) -> Event:
    line = line.rstrip("\n")
    if " " not in line:
        raise LogCorruptError("missing checksum separator", line_no)
    checksum, body = line.split(" ", 1)
    if _checksum(body) != checksum:
        raise LogCorruptError("checksum mismatch (truncated or corrupted line)", line_no)
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise LogCorruptError(f"undecodable payload: {exc}", line_no)
    try:
        seq = data["seq"]
        ts = core.ts_from_str(data["ts"])
        actor = data["actor"]
        kind = data["kind"]
        payload = data["payload"]
    except (KeyError, ValueError, TypeError) as exc:
        raise LogCorruptError(f"bad event envelope: {exc}", line_no)
    if kind not in EVENT_KINDS:
        raise LogCorruptError(f"unknown event kind {kind!r}", line_no)
    if not isinstance(seq, int) or not isinstance(payload, dict):
        raise LogCorruptError("bad event envelope: seq must be int, payload an object", line_no)
    return Event(seq, ts, actor, kind, payload)


def decode_log(text: str) -> list[Event]:
    """Decode a whole log, checking the gap-free-from-1 sequence invariant."""
    events: list[Event] = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        event = decode_line(line, line_no)
        expected = len(events) + 1
        if event.seq != expected:
            raise LogCorruptError(
                f"sequence gap: expected {expected}, got {event.seq}", line_no
            )
        events.append(event)
    return events


def read_log(path: "str | Path") -> list[Event]:
    return decode_log(Path(path).read_text(encoding="utf-8"))


def write_events(fh, events: Iterable[Event]) -> None:
    for event in events:
        fh.write(encode_event(event))

"""Specification documents: plain-text source format, outline numbering,
canonical export, and HTML publication.

Source format (full description: docs/document_format.md):

    #document survey-spec
    #title Survey Group Requirements
    #group survey

    = Experimental Hall

    Free prose paragraph, kept as document structure.

    #req id=R234
    type: technical infrastructure, floor space
    location: site-01
    ---
    During installation, consoles at beam height are needed in the
    experimental hall for measuring.

Headings use "= ", "== ", "=== " prefixes by level. A requirement block opens
with "#req" (or "##req" for a sub-requirement nested under the previous
shallower block), carries "name: value[, value...]" attribute lines, a "---"
separator, and the paragraph text, terminated by a blank line. A block without
id= always creates a record; import writes assigned ids back via the canonical
export, so a synced file re-imports as "unchanged".
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Mapping

from . import core
from .core import NotFoundError, ReqbaseError, Requirement, RequirementId

if TYPE_CHECKING:  # pragma: no cover
    from .store import Snapshot, Store


class DocumentSyntaxError(ReqbaseError):
    """Source text does not follow the document format. line is 1-based."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


HEADING = "heading"
PROSE = "prose"
REQUIREMENT = "requirement"


@dataclass(frozen=True)
class DocNode:
    """One node of a document tree.

    heading nodes carry level/text and structural children; prose nodes carry
    text; requirement nodes carry the record id and nested sub-requirements.
    """

    kind: str
    text: str = ""
    level: int = 0
    rid: RequirementId | None = None
    children: tuple["DocNode", ...] = ()


@dataclass(frozen=True)
class SpecDocument:
    """Ordered tree of headings, prose, and requirement blocks owned by one
    expert group. Design specifications are virtual SpecDocuments assembled
    by query (owning_group empty)."""

    doc_id: str
    title: str
    owning_group: str
    nodes: tuple[DocNode, ...] = ()


def iter_requirement_nodes(
    doc: SpecDocument,
) -> Iterator[tuple[DocNode, int]]:
    """Yield (node, depth) for every requirement node, depth-first."""

    def walk(nodes: tuple[DocNode, ...], depth: int) -> Iterator[tuple[DocNode, int]]:
        for node in nodes:
            if node.kind == REQUIREMENT:
                yield node, depth
                yield from walk(node.children, depth + 1)
            elif node.kind == HEADING:
                yield from walk(node.children, depth)

    yield from walk(doc.nodes, 1)


def outline_map(doc: SpecDocument) -> dict[RequirementId, str]:
    """Dotted depth-first positions of all requirement blocks.

    Top-level blocks are numbered across the whole document regardless of
    headings; children are numbered within their parent ("18.1.1" is the
    first child of the first child of the 18th top-level block).
    """
    out: dict[RequirementId, str] = {}

    def assign(node: DocNode, number: str) -> None:
        if node.rid is not None:
            out[node.rid] = number
        for i, child in enumerate(node.children, start=1):
            assign(child, f"{number}.{i}")

    counter = 0

    def walk(nodes: tuple[DocNode, ...]) -> None:
        nonlocal counter
        for node in nodes:
            if node.kind == REQUIREMENT:
                counter += 1
                assign(node, str(counter))
            elif node.kind == HEADING:
                walk(node.children)

    walk(doc.nodes)
    return out


# --- event payload shapes ---------------------------------------------------

def node_to_jsonable(node: DocNode) -> dict[str, object]:
    if node.kind == HEADING:
        return {
            "kind": HEADING,
            "level": node.level,
            "text": node.text,
            "children": [node_to_jsonable(c) for c in node.children],
        }
    if node.kind == PROSE:
        return {"kind": PROSE, "text": node.text}
    return {
        "kind": REQUIREMENT,
        "id": str(node.rid),
        "children": [node_to_jsonable(c) for c in node.children],
    }


def node_from_jsonable(data: Mapping[str, object]) -> DocNode:
    kind = data["kind"]
    children = tuple(node_from_jsonable(c) for c in data.get("children", ()))  # type: ignore[union-attr]
    if kind == HEADING:
        return DocNode(HEADING, text=data["text"], level=int(data["level"]), children=children)
    if kind == PROSE:
        return DocNode(PROSE, text=data["text"])
    if kind == REQUIREMENT:
        return DocNode(REQUIREMENT, rid=RequirementId.parse(data["id"]), children=children)
    raise ValueError(f"unknown node kind {kind!r}")


def document_to_jsonable(doc: SpecDocument) -> dict[str, object]:
    return {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "group": doc.owning_group,
        "nodes": [node_to_jsonable(n) for n in doc.nodes],
    }


def document_from_jsonable(data: Mapping[str, object]) -> SpecDocument:
    return SpecDocument(
        doc_id=data["doc_id"],
        title=data["title"],
        owning_group=data["group"],
        nodes=tuple(node_from_jsonable(n) for n in data["nodes"]),  # type: ignore[union-attr]
    )


# --- parsing ----------------------------------------------------------------

_HEADING_RE = re.compile(r"^(=+) +(\S.*)$")
_BLOCK_RE = re.compile(r"^(#+)req(?:[ \t]+id=(\S+))?[ \t]*$")
_ATTR_LINE_RE = re.compile(r"^([A-Za-z0-9_.-]+):(.*)$")
_HEADER_RE = re.compile(r"^#(document|title|group)(?:[ \t]+(.*))?$")


@dataclass
class ParsedBlock:
    line: int
    depth: int
    rid: RequirementId | None
    attrs: dict[str, list[str]]
    text: str


@dataclass
class BuildNode:
    kind: str
    line: int
    text: str = ""
    level: int = 0
    block: ParsedBlock | None = None
    children: list["BuildNode"] = field(default_factory=list)


@dataclass
class ParsedDocument:
    doc_id: str | None
    title: str | None
    group: str
    roots: list[BuildNode]

    def blocks(self) -> list[ParsedBlock]:
        out: list[ParsedBlock] = []

        def walk(nodes: list[BuildNode]) -> None:
            for n in nodes:
                if n.block is not None:
                    out.append(n.block)
                walk(n.children)

        walk(self.roots)
        return out


def _split_values(raw: str, line_no: int) -> list[str]:
    """Comma-separated attribute values; quote a value that contains commas,
    quotes, or surrounding spaces."""
    values: list[str] = []
    i, n = 0, len(raw)
    while True:
        while i < n and raw[i] == " ":
            i += 1
        if i >= n:
            if values:
                raise DocumentSyntaxError("empty value after comma", line_no)
            return values
        if raw[i] == '"':
            i += 1
            out = []
            while i < n and raw[i] != '"':
                if raw[i] == "\\":
                    if i + 1 >= n or raw[i + 1] not in '"\\':
                        raise DocumentSyntaxError("bad escape in quoted value", line_no)
                    out.append(raw[i + 1])
                    i += 2
                    continue
                out.append(raw[i])
                i += 1
            if i >= n:
                raise DocumentSyntaxError("unterminated quoted value", line_no)
            i += 1
            values.append("".join(out))
            while i < n and raw[i] == " ":
                i += 1
        else:
            start = i
            while i < n and raw[i] != ",":
                if raw[i] == '"':
                    raise DocumentSyntaxError("quotes may only wrap a whole value", line_no)
                i += 1
            value = raw[start:i].strip()
            if not value:
                raise DocumentSyntaxError("empty value", line_no)
            values.append(value)
        if i >= n:
            return values
        if raw[i] != ",":
            raise DocumentSyntaxError(f"expected comma, got {raw[i]!r}", line_no)
        i += 1


def parse_document(source: str) -> ParsedDocument:
    """Parse document source text. Raises DocumentSyntaxError with the line
    number on malformed input; attribute/value problems are not checked here
    (the import reports them per block)."""
    lines = source.split("\n")
    n = len(lines)
    i = 0

    headers: dict[str, str] = {}
    items: list[BuildNode] = []
    seen_ids: set[RequirementId] = set()
    body_started = False

    def line_no() -> int:
        return i + 1

    while i < n:
        line = lines[i]
        if not line.strip():
            i += 1
            continue

        header = _HEADER_RE.match(line)
        if header:
            if body_started:
                raise DocumentSyntaxError(f"#{header.group(1)} must precede the document body", line_no())
            key = header.group(1)
            if key in headers:
                raise DocumentSyntaxError(f"duplicate #{key} header", line_no())
            headers[key] = (header.group(2) or "").strip()
            i += 1
            continue

        heading = _HEADING_RE.match(line)
        if heading:
            body_started = True
            items.append(
                BuildNode(HEADING, line_no(), text=heading.group(2).strip(), level=len(heading.group(1)))
            )
            i += 1
            continue

        block_start = _BLOCK_RE.match(line)
        if block_start:
            body_started = True
            start_line = line_no()
            depth = len(block_start.group(1))
            rid: RequirementId | None = None
            if block_start.group(2):
                try:
                    rid = RequirementId.parse(block_start.group(2))
                except ValueError as exc:
                    raise DocumentSyntaxError(str(exc), start_line)
                if rid in seen_ids:
                    raise DocumentSyntaxError(f"duplicate block id {rid}", start_line)
                seen_ids.add(rid)
            i += 1
            attrs: dict[str, list[str]] = {}
            while True:
                if i >= n:
                    raise DocumentSyntaxError("block is missing its --- separator", line_no())
                line = lines[i]
                if line.strip() == "---":
                    i += 1
                    break
                if not line.strip():
                    raise DocumentSyntaxError("block is missing its --- separator", line_no())
                attr = _ATTR_LINE_RE.match(line)
                if not attr:
                    raise DocumentSyntaxError(
                        "expected an attribute line (name: value) or ---", line_no()
                    )
                name = attr.group(1)
                if name in attrs:
                    raise DocumentSyntaxError(f"duplicate attribute {name!r} in block", line_no())
                attrs[name] = _split_values(attr.group(2), line_no())
                i += 1
            text_lines: list[str] = []
            while i < n and lines[i].strip():
                text_lines.append(lines[i])
                i += 1
            if not text_lines:
                raise DocumentSyntaxError("block has no paragraph text", line_no())
            block = ParsedBlock(start_line, depth, rid, attrs, "\n".join(text_lines))
            items.append(BuildNode(REQUIREMENT, start_line, block=block))
            continue

        if line.lstrip().startswith(("#", "=")):
            raise DocumentSyntaxError(f"unrecognized directive {line.strip().split()[0]!r}", line_no())

        # prose paragraph: consecutive non-structural non-blank lines
        body_started = True
        start_line = line_no()
        prose_lines = []
        while i < n and lines[i].strip() and not lines[i].lstrip().startswith(("#", "=")):
            prose_lines.append(lines[i].rstrip())
            i += 1
        items.append(BuildNode(PROSE, start_line, text="\n".join(prose_lines)))

    if "group" not in headers or not headers["group"]:
        raise DocumentSyntaxError("missing #group header", 1)

    roots = _build_tree(items)
    return ParsedDocument(
        doc_id=headers.get("document") or None,
        title=headers.get("title") or None,
        group=headers["group"],
        roots=roots,
    )


def _build_tree(items: list[BuildNode]) -> list[BuildNode]:
    roots: list[BuildNode] = []
    heading_stack: list[BuildNode] = []
    block_stack: list[BuildNode] = []

    def container() -> list[BuildNode]:
        return heading_stack[-1].children if heading_stack else roots

    for item in items:
        if item.kind == HEADING:
            block_stack.clear()
            while heading_stack and heading_stack[-1].level >= item.level:
                heading_stack.pop()
            parent_level = heading_stack[-1].level if heading_stack else 0
            if item.level > parent_level + 1:
                raise DocumentSyntaxError(
                    f"heading level jumps from {parent_level} to {item.level}", item.line
                )
            container().append(item)
            heading_stack.append(item)
        elif item.kind == PROSE:
            block_stack.clear()
            container().append(item)
        else:
            depth = item.block.depth  # type: ignore[union-attr]
            if depth > len(block_stack) + 1:
                raise DocumentSyntaxError(
                    f"sub-requirement nesting jumps from {len(block_stack)} to {depth}", item.line
                )
            del block_stack[depth - 1 :]
            if block_stack:
                block_stack[-1].children.append(item)
            else:
                container().append(item)
            block_stack.append(item)
    return roots


# --- canonical export -------------------------------------------------------

def _format_attr_value(value: str) -> str:
    if value and '"' not in value and "," not in value and "\\" not in value and value == value.strip():
        return value
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def _export_block(
    req: Requirement, depth: int, schema: core.AttributeSchema
) -> str:
    lines = [f"{'#' * depth}req id={req.id}"]
    for adef in schema:
        value = req.attributes.get(adef.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            rendered = ", ".join(_format_attr_value(v) for v in value)
        else:
            rendered = _format_attr_value(value)
        lines.append(f"{adef.name}: {rendered}")
    lines.append("---")
    lines.append(req.text)
    return "\n".join(lines)


def export_document(snapshot: "Snapshot", doc_id: str) -> str:
    """Canonical source text; import(export(doc)) reports all blocks unchanged."""
    doc = snapshot.documents.get(doc_id)
    if doc is None:
        raise NotFoundError(f"no document {doc_id!r}")
    schema = snapshot.schema
    parts = [f"#document {doc.doc_id}", f"#title {doc.title}", f"#group {doc.owning_group}"]

    def walk(nodes: tuple[DocNode, ...], block_depth: int) -> None:
        for node in nodes:
            if node.kind == HEADING:
                parts.append("")
                parts.append(f"{'=' * node.level} {node.text}")
                walk(node.children, 1)
            elif node.kind == PROSE:
                parts.append("")
                parts.append(node.text)
            else:
                req = snapshot.requirements[node.rid]
                parts.append("")
                parts.append(_export_block(req, block_depth, schema))
                walk(node.children, block_depth + 1)

    walk(doc.nodes, 1)
    return "\n".join(parts) + "\n"


# --- import (delegates to the store's transactional import) ------------------

@dataclass
class ImportReport:
    """What one import did: created/updated/unchanged record ids plus
    per-block failures as (line, reason). canonical_source is the synced
    export (assigned ids written back) for the caller to save."""

    doc_id: str
    created: list[RequirementId] = field(default_factory=list)
    updated: list[RequirementId] = field(default_factory=list)
    unchanged: list[RequirementId] = field(default_factory=list)
    failed: list[tuple[int, str]] = field(default_factory=list)
    canonical_source: str = ""

    def summary(self) -> str:
        return (
            f"created {len(self.created)}, updated {len(self.updated)}, "
            f"unchanged {len(self.unchanged)}, failed {len(self.failed)}"
        )

    def to_dict(self) -> dict[str, object]:
        return {
            "doc_id": self.doc_id,
            "created": [str(r) for r in self.created],
            "updated": [str(r) for r in self.updated],
            "unchanged": [str(r) for r in self.unchanged],
            "failed": [{"line": line, "reason": reason} for line, reason in self.failed],
        }


def import_document(store: "Store", actor: str, doc_id: str, source_text: str) -> ImportReport:
    """Parse source_text and synchronize it into the store.

    New blocks create records, id= blocks update them (no-ops absorbed), the
    document tree is replaced and outlines renumbered. Returns the import
    report; see Store.import_document.
    """
    return store.import_document(actor, doc_id, source_text)


# --- HTML publication --------------------------------------------------------

_CSS = """
body { font-family: Georgia, serif; margin: 2rem auto; max-width: 54rem; color: #1c1c1c; }
header.doc-header { border-bottom: 2px solid #335; margin-bottom: 1.5rem; }
p.doc-meta { color: #667; font-size: 0.9rem; }
article.requirement { border: 1px solid #ccd; border-left: 4px solid #335; margin: 1rem 0; padding: 0.6rem 1rem; }
article.requirement article.requirement { border-left-color: #779; }
.req-head { font-family: monospace; color: #335; margin-bottom: 0.4rem; }
.req-outline { font-weight: bold; margin-right: 0.6rem; }
.req-revision { color: #889; margin-left: 0.6rem; }
p.req-text { margin: 0.3rem 0; }
table.req-attrs, table.view-results, table.checklist { border-collapse: collapse; margin-top: 0.5rem; }
table.req-attrs th { text-align: left; padding-right: 1rem; color: #556; font-weight: normal; }
table.view-results th, table.view-results td, table.checklist th, table.checklist td { border: 1px solid #bbc; padding: 0.3rem 0.6rem; text-align: left; }
table.view-results thead, table.checklist thead { background: #eef; }
a.req-link { color: #246; }
""".strip()


def html_page(title: str, body: str) -> str:
    return (
        "<!doctype html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        f"<title>{html.escape(title)}</title>\n<style>\n{_CSS}\n</style>\n</head>\n"
        f"<body>\n{body}\n</body>\n</html>\n"
    )


def req_link(rid: RequirementId) -> str:
    return f'<a class="req-link" data-req-id="{rid}" href="/api/requirements/{rid}">{rid}</a>'


def _attr_rows(req: Requirement, schema: core.AttributeSchema) -> str:
    rows = []
    for adef in schema:
        value = req.attributes.get(adef.name)
        if value is None:
            continue
        rendered = ", ".join(value) if isinstance(value, tuple) else value
        rows.append(
            f"<tr><th>{html.escape(adef.name)}</th><td>{html.escape(rendered)}</td></tr>"
        )
    return "\n".join(rows)


def _render_requirement_html(
    snapshot: "Snapshot", node: DocNode, parts: list[str]
) -> None:
    req = snapshot.requirements[node.rid]
    parts.append(f'<article class="requirement" id="{req.id}">')
    parts.append(
        '<div class="req-head">'
        f'<span class="req-outline">{html.escape(req.outline)}</span>'
        f"{req_link(req.id)}"
        f'<span class="req-revision">rev {req.revision}</span>'
        "</div>"
    )
    parts.append(f'<p class="req-text">{html.escape(req.text)}</p>')
    parts.append(f'<table class="req-attrs"><tbody>\n{_attr_rows(req, snapshot.schema)}\n</tbody></table>')
    for child in node.children:
        _render_requirement_html(snapshot, child, parts)
    parts.append("</article>")


def render_document_html(snapshot: "Snapshot", doc: "str | SpecDocument") -> str:
    """Deterministic HTML for one document (authored or virtual design spec).

    Each requirement block renders as an article with element id "R<n>", a
    req-link anchor to the record detail, and an attribute table.
    """
    if isinstance(doc, str):
        resolved = snapshot.documents.get(doc)
        if resolved is None:
            raise NotFoundError(f"no document {doc!r}")
        doc = resolved

    parts: list[str] = []
    parts.append('<header class="doc-header">')
    parts.append(f"<h1>{html.escape(doc.title)}</h1>")
    meta = f"document {doc.doc_id}"
    if doc.owning_group:
        meta += f", group {doc.owning_group}"
    parts.append(f'<p class="doc-meta">{html.escape(meta)}</p>')
    parts.append("</header>")
    parts.append("<main>")

    def walk(nodes: tuple[DocNode, ...]) -> None:
        for node in nodes:
            if node.kind == HEADING:
                level = min(node.level + 1, 6)
                parts.append(f'<section class="doc-section level-{node.level}">')
                parts.append(f"<h{level}>{html.escape(node.text)}</h{level}>")
                walk(node.children)
                parts.append("</section>")
            elif node.kind == PROSE:
                parts.append(f'<p class="prose">{html.escape(node.text)}</p>')
            else:
                _render_requirement_html(snapshot, node, parts)

    walk(doc.nodes)
    parts.append("</main>")
    return html_page(doc.title, "\n".join(parts))


_EXCERPT_LEN = 72


def excerpt(text: str) -> str:
    flat = " ".join(text.split())
    if len(flat) <= _EXCERPT_LEN:
        return flat
    return flat[: _EXCERPT_LEN - 3].rstrip() + "..."


def render_view_html(
    snapshot: "Snapshot", results: list[Requirement], title: str = "View results"
) -> str:
    """Filtered tabular view: one row per record, columns Requirement, Status,
    then every schema attribute (except status) in schema order."""
    schema = snapshot.schema
    attr_names = [a.name for a in schema if a.name != "status"]
    head = "".join(
        f"<th>{html.escape(c)}</th>" for c in ["Requirement", "Status", *attr_names]
    )
    rows = []
    for req in results:
        cells = [
            f'<td>{req_link(req.id)} <span class="req-excerpt">{html.escape(excerpt(req.text))}</span></td>'
        ]
        status = req.attributes.get("status", "")
        cells.append(f"<td>{html.escape(status if isinstance(status, str) else '')}</td>")
        for name in attr_names:
            value = req.attributes.get(name)
            rendered = ", ".join(value) if isinstance(value, tuple) else (value or "")
            cells.append(f"<td>{html.escape(rendered)}</td>")
        rows.append(f'<tr class="view-row" data-req-id="{req.id}">{"".join(cells)}</tr>')
    body = (
        f"<h1>{html.escape(title)}</h1>\n"
        f'<table class="view-results">\n<thead><tr>{head}</tr></thead>\n'
        f'<tbody>\n{chr(10).join(rows)}\n</tbody>\n</table>'
    )
    return html_page(title, body)


# --- plain-text rendering (CLI) ----------------------------------------------

def render_document_text(snapshot: "Snapshot", doc: "str | SpecDocument") -> str:
    if isinstance(doc, str):
        resolved = snapshot.documents.get(doc)
        if resolved is None:
            raise NotFoundError(f"no document {doc!r}")
        doc = resolved
    lines = [doc.title, "=" * len(doc.title)]

    def walk(nodes: tuple[DocNode, ...]) -> None:
        for node in nodes:
            if node.kind == HEADING:
                lines.append("")
                lines.append(f"{'=' * node.level} {node.text}")
                walk(node.children)
            elif node.kind == PROSE:
                lines.append("")
                lines.append(node.text)
            else:
                req = snapshot.requirements[node.rid]
                status = req.attributes.get("status", "")
                lines.append("")
                lines.append(f"{req.outline or '-'}  {req.id} (rev {req.revision}, {status})")
                for text_line in req.text.split("\n"):
                    lines.append(f"    {text_line}")
                walk(node.children)

    walk(doc.nodes)
    return "\n".join(lines) + "\n"

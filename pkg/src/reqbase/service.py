"""HTTP facade over store, query, docio and workflows.

Thin by design: every endpoint is the corresponding module call on the same
snapshot, encoded canonically (JSON, sorted keys). Every response carries the
snapshot's event sequence, both in the body envelope and in the X-Sequence
header, so clients can detect missed updates. Optimistic concurrency surfaces
as protocol-level preconditions: updates require an X-Expected-Revision
header and a mismatch answers 409 with the current revision.

Response envelope: {"sequence": N, "data": ...} on success,
{"sequence": N, "error": {"code", "detail", ...}} on failure.
Endpoint table and field names: docs/api.md (golden-file tested).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from fastapi import FastAPI, Request, Response

from . import core, docio, eventlog, query as querylang, workflows
from .core import (
    ConflictError,
    NotFoundError,
    ReqbaseError,
    RequirementId,
    ValidationError,
)
from .docio import DocumentSyntaxError
from .query import QueryParseError
from .store import RevisionConflictError, Store
from .workflows import ResultsParseError


@dataclass
class ServiceConfig:
    """Runtime configuration for serve(): bind address, log-file path,
    optional shared project token and static-asset directory."""

    log_path: str
    host: str = "127.0.0.1"
    port: int = 8000
    token: str | None = None
    static_dir: str | None = None


class ApiError(ReqbaseError):
    """Protocol-level error with an HTTP status and machine code."""

    def __init__(self, status: int, code: str, detail: str, extra: dict | None = None):
        self.status = status
        self.code = code
        self.detail = detail
        self.extra = extra or {}
        super().__init__(detail)


def _to_api_error(exc: Exception) -> ApiError:
    """Every module error maps to exactly one machine code."""
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, RevisionConflictError):
        return ApiError(
            409,
            "REVISION_CONFLICT",
            str(exc),
            {"current_revision": exc.current_revision, "id": str(exc.rid)},
        )
    if isinstance(exc, QueryParseError):
        return ApiError(400, "PARSE", str(exc), {"position": exc.position})
    if isinstance(exc, DocumentSyntaxError):
        return ApiError(400, "PARSE", str(exc), {"line": exc.line})
    if isinstance(exc, ResultsParseError):
        return ApiError(400, "PARSE", str(exc), {"line": exc.line})
    if isinstance(exc, ValidationError):
        return ApiError(
            400,
            "VALIDATION",
            str(exc),
            {
                "violations": [
                    {"code": v.code, "attribute": v.attribute, "message": str(v)}
                    for v in exc.violations
                ]
            },
        )
    if isinstance(exc, NotFoundError):
        return ApiError(404, "NOT_FOUND", str(exc))
    if isinstance(exc, ConflictError):
        return ApiError(409, "CONFLICT", str(exc))
    return ApiError(500, "INTERNAL", f"{type(exc).__name__}: {exc}")


def create_app(store: Store, token: str | None = None, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="reqbase", docs_url=None, redoc_url=None, openapi_url=None)

    def seq() -> int:
        return store.sequence()

    def respond(data: object, status: int = 200) -> Response:
        sequence = seq()
        body = eventlog.canonical_json({"data": data, "sequence": sequence})
        return Response(
            content=body,
            status_code=status,
            media_type="application/json",
            headers={"X-Sequence": str(sequence)},
        )

    def respond_error(err: ApiError) -> Response:
        sequence = seq()
        error = {"code": err.code, "detail": err.detail, **err.extra}
        body = eventlog.canonical_json({"error": error, "sequence": sequence})
        return Response(
            content=body,
            status_code=err.status,
            media_type="application/json",
            headers={"X-Sequence": str(sequence)},
        )

    def respond_html(html_text: str) -> Response:
        return Response(
            content=html_text,
            media_type="text/html; charset=utf-8",
            headers={"X-Sequence": str(seq())},
        )

    @app.exception_handler(Exception)
    async def handle_any(request: Request, exc: Exception) -> Response:  # pragma: no cover
        return respond_error(_to_api_error(exc))

    @app.exception_handler(ReqbaseError)
    async def handle_domain(request: Request, exc: ReqbaseError) -> Response:
        return respond_error(_to_api_error(exc))

    @app.middleware("http")
    async def auth(request: Request, call_next):
        if token and request.url.path.startswith("/api"):
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                return respond_error(ApiError(401, "UNAUTHORIZED", "missing or bad project token"))
        return await call_next(request)

    def actor_of(request: Request) -> str:
        actor = request.headers.get("x-actor", "").strip()
        if not actor:
            raise ApiError(400, "VALIDATION", "X-Actor header is required for writes")
        return actor

    async def body_json(request: Request) -> dict:
        try:
            data = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            raise ApiError(400, "PARSE", f"bad JSON body: {exc}")
        if not isinstance(data, dict):
            raise ApiError(400, "PARSE", "JSON body must be an object")
        return data

    def parse_rid(raw: str) -> RequirementId:
        try:
            return RequirementId.parse(raw)
        except ValueError as exc:
            raise ApiError(404, "NOT_FOUND", str(exc))

    # --- requirements ---------------------------------------------------------

    @app.get("/api/requirements")
    async def list_requirements(q: str = "") -> Response:
        snapshot = store.snapshot()
        results = querylang.evaluate(querylang.parse_query(q), snapshot)
        return respond(
            {
                "count": len(results),
                "query": q,
                "requirements": [core.requirement_to_dict(r) for r in results],
            }
        )

    @app.get("/api/requirements/{rid}/history")
    async def requirement_history(rid: str) -> Response:
        req = store.get_requirement(parse_rid(rid))
        return respond(core.requirement_to_dict(req, include_change_log=True))

    @app.get("/api/requirements/{rid}")
    async def get_requirement(rid: str, as_of: int | None = None) -> Response:
        req = store.get_requirement(parse_rid(rid), as_of=as_of)
        return respond(core.requirement_to_dict(req))

    @app.post("/api/requirements/{rid}")
    async def update_requirement(rid: str, request: Request) -> Response:
        actor = actor_of(request)
        raw_rev = request.headers.get("x-expected-revision")
        if raw_rev is None or not raw_rev.isdigit():
            raise ApiError(
                400, "VALIDATION", "X-Expected-Revision header (integer) is required"
            )
        data = await body_json(request)
        changes_in = data.get("changes")
        if not isinstance(changes_in, list):
            raise ApiError(400, "VALIDATION", 'body must carry "changes": [{"field", "value"}]')
        changes = []
        for item in changes_in:
            if not isinstance(item, dict) or "field" not in item:
                raise ApiError(400, "VALIDATION", 'each change needs a "field"')
            value = item.get("value")
            changes.append((item["field"], tuple(value) if isinstance(value, list) else value))
        req = store.update_requirement(actor, parse_rid(rid), int(raw_rev), changes)
        return respond(core.requirement_to_dict(req))

    # --- documents -------------------------------------------------------------

    @app.get("/api/documents")
    async def list_documents() -> Response:
        snapshot = store.snapshot()
        docs = []
        for doc_id in sorted(snapshot.documents):
            doc = snapshot.documents[doc_id]
            docs.append(
                {
                    "doc_id": doc.doc_id,
                    "title": doc.title,
                    "group": doc.owning_group,
                    "requirements": len(docio.outline_map(doc)),
                }
            )
        return respond({"documents": docs})

    @app.get("/api/documents/{doc_id}.html")
    async def document_html(doc_id: str) -> Response:
        return respond_html(docio.render_document_html(store.snapshot(), doc_id))

    @app.get("/api/documents/{doc_id}")
    async def get_document(doc_id: str) -> Response:
        snapshot = store.snapshot()
        doc = snapshot.documents.get(doc_id)
        if doc is None:
            raise NotFoundError(f"no document {doc_id!r}")
        data = docio.document_to_jsonable(doc)
        data["records"] = [
            core.requirement_to_dict(snapshot.requirements[rid])
            for rid in sorted(docio.outline_map(doc))
        ]
        return respond(data)

    @app.post("/api/documents/{doc_id}/import")
    async def import_document(doc_id: str, request: Request) -> Response:
        actor = actor_of(request)
        source = (await request.body()).decode("utf-8")
        report = store.import_document(actor, doc_id, source)
        data = report.to_dict()
        data["canonical_source"] = report.canonical_source
        return respond(data)

    # --- views -------------------------------------------------------------------

    @app.get("/api/views")
    async def list_views() -> Response:
        snapshot = store.snapshot()
        return respond(
            {
                "views": [
                    {
                        "name": v.name,
                        "owner": v.owner,
                        "query": querylang.print_query(v.query),
                    }
                    for v in querylang.list_views(snapshot)
                ]
            }
        )

    @app.post("/api/views")
    async def save_view(request: Request) -> Response:
        actor = actor_of(request)
        data = await body_json(request)
        name = data.get("name")
        if not isinstance(name, str):
            raise ApiError(400, "VALIDATION", 'body must carry "name" and "query"')
        query = querylang.parse_query(str(data.get("query", "")))
        view = store.save_view(actor, name, query)
        return respond(
            {"name": view.name, "owner": view.owner, "query": querylang.print_query(view.query)},
            status=201,
        )

    @app.get("/api/views/{name}/results")
    async def view_results(name: str) -> Response:
        snapshot = store.snapshot()
        results = querylang.run_view(name, snapshot)
        view = snapshot.views[name]
        return respond(
            {
                "view": name,
                "query": querylang.print_query(view.query),
                "count": len(results),
                "requirements": [core.requirement_to_dict(r) for r in results],
            }
        )

    # --- buildings: design specs, checklists, status ------------------------------

    @app.get("/api/buildings/{building}/spec.html")
    async def building_spec_html(building: str) -> Response:
        snapshot = store.snapshot()
        doc = workflows.generate_design_spec(building, snapshot)
        return respond_html(docio.render_document_html(snapshot, doc))

    @app.get("/api/buildings/{building}/spec")
    async def building_spec(building: str) -> Response:
        snapshot = store.snapshot()
        doc = workflows.generate_design_spec(building, snapshot)
        data = docio.document_to_jsonable(doc)
        data["records"] = [
            core.requirement_to_dict(snapshot.requirements[node.rid])
            for node, _ in docio.iter_requirement_nodes(doc)
        ]
        return respond(data)

    @app.get("/api/buildings/{building}/checklist")
    async def building_checklist(building: str) -> Response:
        checklist = workflows.generate_checklist(building, store.snapshot())
        return respond(workflows.checklist_to_dict(checklist))

    @app.get("/api/buildings/{building}/checklist.html")
    async def building_checklist_html(building: str) -> Response:
        snapshot = store.snapshot()
        checklist = workflows.generate_checklist(building, snapshot)
        return respond_html(workflows.render_checklist_html(snapshot, checklist))

    @app.get("/api/buildings/{building}/status")
    async def building_status(building: str) -> Response:
        report = workflows.approval_status_report(building, store.snapshot())
        return respond(report.to_dict())

    # --- approvals and staleness ----------------------------------------------------

    @app.post("/api/approvals")
    async def post_approvals(request: Request) -> Response:
        actor = actor_of(request)
        data = await body_json(request)
        subject = data.get("subject")
        if not isinstance(subject, str) or not subject:
            raise ApiError(400, "VALIDATION", 'body must carry a non-empty "subject"')
        as_of = data.get("as_of")
        if as_of is not None and not isinstance(as_of, int):
            raise ApiError(400, "VALIDATION", '"as_of" must be an integer event sequence')
        raw_results = data.get("results")
        if not isinstance(raw_results, list):
            raise ApiError(400, "VALIDATION", 'body must carry "results": [{"id", "verdict"}]')
        results = []
        for item in raw_results:
            if not isinstance(item, dict) or "id" not in item or "verdict" not in item:
                raise ApiError(400, "VALIDATION", 'each result needs "id" and "verdict"')
            try:
                rid = RequirementId.parse(str(item["id"]))
            except ValueError as exc:
                raise ApiError(400, "VALIDATION", str(exc))
            results.append((rid, str(item["verdict"]), item.get("note")))
        outcomes = workflows.record_approval(store, actor, subject, results, as_of=as_of)
        return respond({"outcomes": [o.to_dict() for o in outcomes]})

    @app.get("/api/stale")
    async def stale() -> Response:
        rows = workflows.find_stale_approvals(store.snapshot())
        return respond(
            {
                "stale": [
                    {
                        "id": str(row.rid),
                        "subject": row.subject,
                        "approved_revision": row.approved_revision,
                        "current_revision": row.current_revision,
                    }
                    for row in rows
                ]
            }
        )

    @app.get("/api/schema")
    async def get_schema() -> Response:
        return respond(core.schema_to_dict(store.snapshot().schema))

    @app.get("/api/sequence")
    async def sequence() -> Response:
        return respond({})

    @app.get("/")
    async def index() -> Response:
        return respond({"service": "reqbase"})

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=static_dir, html=True), name="app")

    return app


def serve(config: ServiceConfig) -> None:
    """Run the HTTP service; holds the writer lock for its lifetime so other
    processes cannot append to the same log."""
    import signal

    import uvicorn

    store = Store.open(config.log_path)
    store.acquire_writer_lock()

    # uvicorn re-raises a captured SIGTERM with the default disposition after
    # its graceful shutdown, which would kill us before the lock is released
    def _release_then_die(signum, frame):
        store.close()
        signal.signal(signum, signal.SIG_DFL)
        signal.raise_signal(signum)

    signal.signal(signal.SIGTERM, _release_then_die)
    try:
        app = create_app(store, token=config.token, static_dir=config.static_dir)
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        store.close()

"""Command-line entry point: the full system is operable without the web UI.

    reqbase [-f LOG] [-a ACTOR] <command> ...

Log-file resolution order: --log-file flag, REQBASE_LOG, ./reqbase.log.
Writes need an actor name (--actor or REQBASE_ACTOR) for change-log
attribution. Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import core, docio, eventlog, query as querylang, workflows
from .core import ReqbaseError
from .query import QueryParseError
from .store import Store

DEFAULT_LOG = "reqbase.log"


def _log_path(args) -> Path:
    return Path(args.log_file or os.environ.get("REQBASE_LOG") or DEFAULT_LOG)


def _actor(args) -> str:
    actor = args.actor or os.environ.get("REQBASE_ACTOR") or ""
    if not actor:
        raise UsageError("an actor name is required for writes (--actor or REQBASE_ACTOR)")
    return actor


def _clock():
    fixed = os.environ.get("REQBASE_FIXED_TIME")
    if fixed:
        ts = core.ts_from_str(fixed)
        return lambda: ts
    return None


def _open(args) -> Store:
    return Store.open(_log_path(args), clock=_clock())


class UsageError(Exception):
    pass


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _json_out(data: object) -> None:
    _emit(eventlog.canonical_json(data))


# --- commands -----------------------------------------------------------------

def cmd_init(args) -> int:
    actor = args.actor or os.environ.get("REQBASE_ACTOR") or "system"
    with Store.init(_log_path(args), clock=_clock(), actor=actor):
        pass
    _emit(f"initialized {_log_path(args)}")
    return 0


def cmd_import(args) -> int:
    source = Path(args.file).read_text(encoding="utf-8")
    with _open(args) as store:
        report = store.import_document(_actor(args), args.doc_id, source)
        if args.write_back:
            Path(args.file).write_text(report.canonical_source, encoding="utf-8")
    if args.format == "json":
        _json_out(report.to_dict())
    else:
        _emit(f"document {report.doc_id}: {report.summary()}")
        for label, ids in (
            ("created", report.created),
            ("updated", report.updated),
            ("unchanged", report.unchanged),
        ):
            if ids:
                _emit(f"  {label}: {', '.join(str(r) for r in ids)}")
        for line, reason in report.failed:
            _emit(f"  failed line {line}: {reason}")
    return 1 if report.failed else 0


def cmd_export(args) -> int:
    with _open(args) as store:
        text = docio.export_document(store.snapshot(), args.doc_id)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_query(args) -> int:
    query = querylang.parse_query(args.query)
    with _open(args) as store:
        results = querylang.evaluate(query, store.snapshot())
    if args.format == "json":
        _json_out(
            {
                "count": len(results),
                "requirements": [core.requirement_to_dict(r) for r in results],
            }
        )
    else:
        for req in results:
            status = req.attributes.get("status", "")
            _emit(f"{str(req.id):<6} {status:<12} {docio.excerpt(req.text)}")
    return 0


def cmd_spec(args) -> int:
    with _open(args) as store:
        snapshot = store.snapshot()
        doc = workflows.generate_design_spec(args.building, snapshot)
        rendered = (
            docio.render_document_html(snapshot, doc)
            if args.html
            else docio.render_document_text(snapshot, doc)
        )
    sys.stdout.write(rendered)
    return 0


def cmd_checklist(args) -> int:
    with _open(args) as store:
        snapshot = store.snapshot()
        checklist = workflows.generate_checklist(args.building, snapshot)
        if args.html:
            sys.stdout.write(workflows.render_checklist_html(snapshot, checklist))
        elif args.format == "json":
            _json_out(workflows.checklist_to_dict(checklist))
        else:
            sys.stdout.write(workflows.format_checklist_text(checklist))
    return 0


def cmd_approve(args) -> int:
    results = workflows.parse_results_file(Path(args.results_file).read_text(encoding="utf-8"))
    with _open(args) as store:
        outcomes = workflows.record_approval(
            store, _actor(args), args.building, results, as_of=args.as_of
        )
    failed = False
    for outcome in outcomes:
        if outcome.status == "recorded":
            _emit(
                f"{outcome.rid} recorded ({outcome.approval.verdict} at revision "
                f"{outcome.approval.approved_revision})"
            )
        else:
            failed = True
            detail = outcome.detail
            if outcome.current_revision is not None:
                detail += f" (current revision {outcome.current_revision})"
            _emit(f"{outcome.rid} {outcome.status}: {detail}")
    return 1 if failed else 0


def cmd_stale(args) -> int:
    with _open(args) as store:
        rows = workflows.find_stale_approvals(store.snapshot())
    if args.format == "json":
        _json_out(
            {
                "stale": [
                    {
                        "id": str(r.rid),
                        "subject": r.subject,
                        "approved_revision": r.approved_revision,
                        "current_revision": r.current_revision,
                    }
                    for r in rows
                ]
            }
        )
    else:
        for row in rows:
            _emit(
                f"{row.rid} | {row.subject} | approved {row.approved_revision} | "
                f"current {row.current_revision}"
            )
    return 0


def cmd_status(args) -> int:
    with _open(args) as store:
        report = workflows.approval_status_report(args.building, store.snapshot())
    if args.format == "json":
        _json_out(report.to_dict())
    else:
        _emit(f"building: {report.building}")
        _emit(f"fulfilled: {report.fulfilled}")
        _emit(f"open: {report.open}")
        _emit(f"unapproved: {report.unapproved}")
        _emit(f"stale: {report.stale}")
    return 0


def cmd_views(args) -> int:
    if args.views_command == "save":
        query = querylang.parse_query(args.query)
        with _open(args) as store:
            view = store.save_view(_actor(args), args.name, query)
        _emit(f"saved view {view.name}: {querylang.print_query(view.query)}")
        return 0
    with _open(args) as store:
        snapshot = store.snapshot()
        if args.views_command == "run":
            results = querylang.run_view(args.name, snapshot)
            if args.format == "json":
                _json_out(
                    {
                        "view": args.name,
                        "count": len(results),
                        "requirements": [core.requirement_to_dict(r) for r in results],
                    }
                )
            else:
                for req in results:
                    status = req.attributes.get("status", "")
                    _emit(f"{str(req.id):<6} {status:<12} {docio.excerpt(req.text)}")
            return 0
        for view in querylang.list_views(snapshot):
            _emit(f"{view.name} (owner {view.owner}): {querylang.print_query(view.query)}")
        return 0


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    serve(
        ServiceConfig(
            log_path=str(_log_path(args)),
            host=args.host,
            port=args.port,
            token=args.token or os.environ.get("REQBASE_TOKEN"),
            static_dir=args.static,
        )
    )
    return 0


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reqbase",
        description="Collaborative requirements database",
    )
    parser.add_argument("-f", "--log-file", help=f"event log path (default: $REQBASE_LOG or ./{DEFAULT_LOG})")
    parser.add_argument("-a", "--actor", help="actor name for writes (default: $REQBASE_ACTOR)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("init", help="create an empty log with the default schema").set_defaults(
        func=cmd_init
    )

    p = sub.add_parser("import", help="synchronize a document file into the store")
    p.add_argument("doc_id")
    p.add_argument("file")
    p.add_argument("--write-back", action="store_true", help="rewrite the file with assigned ids")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("export", help="print the canonical source of a document")
    p.add_argument("doc_id")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("query", help="run an ad-hoc query")
    p.add_argument("query")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("spec", help="assemble the design specification for a building")
    p.add_argument("building")
    p.add_argument("--html", action="store_true")
    p.set_defaults(func=cmd_spec)

    p = sub.add_parser("checklist", help="generate the approval checklist for a building")
    p.add_argument("building")
    p.add_argument("--html", action="store_true")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_checklist)

    p = sub.add_parser("approve", help="read checklist results back into the store")
    p.add_argument("building")
    p.add_argument("results_file")
    p.add_argument("--as-of", type=int, default=None, help="event sequence the checklist was generated from")
    p.set_defaults(func=cmd_approve)

    p = sub.add_parser("stale", help="list approvals whose requirement changed afterwards")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_stale)

    p = sub.add_parser("status", help="approval status counts for a building")
    p.add_argument("building")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_status)

    p = sub.add_parser("views", help="list, save, or run stored views")
    views_sub = p.add_subparsers(dest="views_command", required=True)
    views_sub.add_parser("list").set_defaults(func=cmd_views)
    vs = views_sub.add_parser("save")
    vs.add_argument("name")
    vs.add_argument("query")
    vs.set_defaults(func=cmd_views)
    vr = views_sub.add_parser("run")
    vr.add_argument("name")
    vr.add_argument("--format", choices=("table", "json"), default="table")
    vr.set_defaults(func=cmd_views)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token", help="shared project token (default: $REQBASE_TOKEN)")
    p.add_argument("--static", help="static asset directory served under /app")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except QueryParseError as exc:
        print(f"query error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ReqbaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Record real service responses for the frontend contract tests.

Builds the four-record demo store (storage room / car access / consoles /
gangways on the experimental hall, first two approved), captures the
endpoints the web client consumes, and writes them under tests/fixtures/.
Rerun after any API change: python3 frontend/scripts/record_fixtures.py
"""

from __future__ import annotations

import sys
from pathlib import Path

from fastapi.testclient import TestClient

REPO = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO / "tests"))

from conftest import SteppingClock, seed_demo  # noqa: E402

from reqbase.core import RequirementId  # noqa: E402
from reqbase.service import create_app  # noqa: E402
from reqbase.store import Store  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"
HALL = "experimental hall"


def record(client: TestClient, name: str, path: str) -> None:
    response = client.get(path)
    assert response.status_code == 200, f"{path}: {response.status_code}"
    _write(name, response.content, f"GET {path}")


def _write(name: str, content: bytes, source: str) -> None:
    out = FIXTURES / name
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(content)
    print(f"  {name}  <-  {source}")


def main() -> None:
    store = seed_demo(Store.in_memory(clock=SteppingClock()))
    client = TestClient(create_app(store))

    print("demo store:")
    record(client, "schema.json", "/api/schema")
    record(client, "sequence.json", "/api/sequence")
    record(client, "documents.json", "/api/documents")
    record(client, "document-survey-spec.json", "/api/documents/survey-spec")
    record(client, "document-survey-spec.html", "/api/documents/survey-spec.html")
    record(client, "requirement-R3.json", "/api/requirements/R3")
    record(client, "requirement-R3-history.json", "/api/requirements/R3/history")
    record(client, "query-floorspace.json", '/api/requirements?q=type~"floor space"')
    record(client, "checklist.json", f"/api/buildings/{HALL}/checklist")
    record(client, "status.json", f"/api/buildings/{HALL}/status")
    record(client, "stale-empty.json", "/api/stale")
    record(client, "views-empty.json", "/api/views")

    # toggling the consoles record (blank in the checklist) and reading back
    approve = client.post(
        "/api/approvals",
        headers={"X-Actor": "webtest"},
        json={
            "subject": HALL,
            "as_of": 8,
            "results": [{"id": "R3", "verdict": "fulfilled"}],
        },
    )
    assert approve.status_code == 200, approve.content
    _write("approve-R3-response.json", approve.content, "POST /api/approvals [R3 fulfilled]")
    record(client, "status-after-approve.json", f"/api/buildings/{HALL}/status")
    record(client, "checklist-after-approve.json", f"/api/buildings/{HALL}/checklist")

    # competing edit to an approved record: R1 was approved at revision 1
    store.update_requirement("editor", RequirementId(1), 1, [("status", "approved")])
    print("after competing edit to R1:")
    record(client, "stale-after-edit.json", "/api/stale")
    record(client, "checklist-after-edit.json", f"/api/buildings/{HALL}/checklist")
    record(client, "status-after-edit.json", f"/api/buildings/{HALL}/status")

    # a second edit, so the history fixture shows a twice-edited record
    store.update_requirement(
        "editor", RequirementId(1), 2, [("text", "A storage room of about 90 m² is needed.")]
    )
    record(client, "requirement-R1-history.json", "/api/requirements/R1/history")


if __name__ == "__main__":
    main()

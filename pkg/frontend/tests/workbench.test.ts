// Approval workbench against recorded responses: checklist rendering,
// toggle/submit semantics (as_of pinned, no write without toggles), and the
// stale flag fed from /api/stale.

import { beforeEach, describe, expect, it } from "vitest";

import { ReqbaseClient } from "../src/api.js";
import { ApprovalWorkbench } from "../src/workbench.js";
import type { ChecklistDto } from "../src/types.js";
import { fixture, fixtureJson, makeFetchStub, type FetchStub } from "./helpers/fixtures.js";

const HALL = "experimental hall";
const CHECKLIST_PATH = "/api/buildings/experimental%20hall/checklist";
const STATUS_PATH = "/api/buildings/experimental%20hall/status";

function root(): HTMLElement {
  document.body.innerHTML = "<div id='root'></div>";
  return document.getElementById("root") as HTMLElement;
}

function baseRoutes(): Record<string, string> {
  return {
    "GET /api/schema": fixture("schema.json"),
    [`GET ${CHECKLIST_PATH}`]: fixture("checklist.json"),
    [`GET ${STATUS_PATH}`]: fixture("status.json"),
    "GET /api/stale": fixture("stale-empty.json"),
  };
}

async function mountWorkbench(stub: FetchStub): Promise<{ wb: ApprovalWorkbench; container: HTMLElement; client: ReqbaseClient }> {
  stub.install();
  const container = root();
  const client = new ReqbaseClient("", "webtest");
  const wb = new ApprovalWorkbench(client, container);
  await wb.mount(HALL);
  return { wb, container, client };
}

describe("approval workbench (recorded fixtures)", () => {
  let stub: FetchStub;

  beforeEach(() => {
    stub = makeFetchStub(baseRoutes());
  });

  it("renders four items with the first two checked, as recorded", async () => {
    const recorded = fixtureJson<ChecklistDto>("checklist.json").data;
    const { container } = await mountWorkbench(stub);
    const rows = Array.from(container.querySelectorAll("tr.wb-row"));
    expect(rows.map((r) => r.getAttribute("data-req-id"))).toEqual(
      recorded.items.map((i) => i.id),
    );
    const checks = Array.from(container.querySelectorAll("input.wb-check")) as HTMLInputElement[];
    expect(checks.map((c) => c.checked)).toEqual(
      recorded.items.map((i) => i.verdict === "fulfilled"),
    );
    expect(checks.map((c) => c.checked)).toEqual([true, true, false, false]);
    expect(container.querySelector(".wb-meta")!.textContent).toBe(
      `Checklist ${recorded.subject}, as-of ${recorded.as_of}`,
    );
    expect(container.querySelector(".status-banner")!.textContent).toBe(
      "fulfilled 2 / open 0 / unapproved 2 / stale 0",
    );
  });

  it("submit without toggles performs no network write", async () => {
    const { wb, container } = await mountWorkbench(stub);
    const callsBefore = stub.calls.filter((c) => c.method === "POST").length;
    await wb.submit();
    expect(stub.calls.filter((c) => c.method === "POST").length).toBe(callsBefore);
    expect(container.querySelector(".wb-message")!.textContent).toContain("Nothing to submit");
  });

  it("toggling the consoles item submits it pinned to the checklist as_of", async () => {
    const { wb, container } = await mountWorkbench(stub);
    // the submit flow refreshes checklist and status; swap in the recorded
    // post-approval responses only after the initial render
    stub.set("POST /api/approvals", fixture("approve-R3-response.json"));
    stub.set(`GET ${STATUS_PATH}`, fixture("status-after-approve.json"));
    stub.set(`GET ${CHECKLIST_PATH}`, fixture("checklist-after-approve.json"));
    const checkbox = container.querySelector('input.wb-check[data-req-id="R3"]') as HTMLInputElement;
    checkbox.checked = true;
    checkbox.dispatchEvent(new Event("change"));
    await wb.submit();

    const post = stub.calls.find((c) => c.method === "POST" && c.url === "/api/approvals");
    expect(post).toBeDefined();
    expect(post!.headers["x-actor"]).toBe("webtest");
    expect(JSON.parse(post!.body!)).toEqual({
      subject: HALL,
      as_of: 8,
      results: [{ id: "R3", verdict: "fulfilled" }],
    });

    // recorded outcome and refreshed status appear
    expect(container.querySelector('.wb-outcome.recorded[data-req-id="R3"]')).not.toBeNull();
    expect(container.querySelector(".status-banner")!.textContent).toBe(
      "fulfilled 3 / open 0 / unapproved 1 / stale 0",
    );
    const checksAfter = Array.from(container.querySelectorAll("input.wb-check")) as HTMLInputElement[];
    expect(checksAfter.map((c) => c.checked)).toEqual([true, true, true, false]);
  });

  it("unchecking a fulfilled item marks it open", async () => {
    stub.set("POST /api/approvals", fixture("approve-R3-response.json"));
    const { wb, container } = await mountWorkbench(stub);
    const checkbox = container.querySelector('input.wb-check[data-req-id="R1"]') as HTMLInputElement;
    checkbox.checked = false;
    checkbox.dispatchEvent(new Event("change"));
    expect(wb.touched.get("R1")).toEqual({ verdict: "open" });
  });

  it("notes ride along with the toggled verdict", async () => {
    stub.set("POST /api/approvals", fixture("approve-R3-response.json"));
    const { wb, container } = await mountWorkbench(stub);
    const checkbox = container.querySelector('input.wb-check[data-req-id="R4"]') as HTMLInputElement;
    checkbox.checked = true;
    checkbox.dispatchEvent(new Event("change"));
    const note = container.querySelector('input.wb-note[data-req-id="R4"]') as HTMLInputElement;
    note.value = "verified on drawing 7";
    note.dispatchEvent(new Event("change"));
    await wb.submit();
    const post = stub.calls.find((c) => c.method === "POST" && c.url === "/api/approvals");
    expect(JSON.parse(post!.body!).results).toEqual([
      { id: "R4", verdict: "fulfilled", note: "verified on drawing 7" },
    ]);
  });

  it("flags stale items with both revision numbers from /api/stale", async () => {
    stub.set(`GET ${CHECKLIST_PATH}`, fixture("checklist-after-edit.json"));
    stub.set(`GET ${STATUS_PATH}`, fixture("status-after-edit.json"));
    stub.set("GET /api/stale", fixture("stale-after-edit.json"));
    const { container } = await mountWorkbench(stub);
    const row = container.querySelector('tr.wb-row[data-req-id="R1"]')!;
    expect(row.classList.contains("stale")).toBe(true);
    const flag = row.querySelector(".wb-stale")!;
    expect(flag.textContent).toBe("stale: approved rev 1, current rev 2");
    // recorded store state: R2/R3 fulfilled, R4 unapproved, R1 stale
    expect(container.querySelector(".status-banner")!.textContent).toBe(
      "fulfilled 2 / open 0 / unapproved 1 / stale 1",
    );
  });

  it("stale submit outcomes surface a regenerate action that reloads", async () => {
    stub.set("POST /api/approvals", JSON.stringify({
      data: {
        outcomes: [
          { id: "R3", status: "stale", detail: "checklist stale, regenerate", current_revision: 2 },
        ],
      },
      sequence: 9,
    }));
    const { wb, container } = await mountWorkbench(stub);
    const checkbox = container.querySelector('input.wb-check[data-req-id="R3"]') as HTMLInputElement;
    checkbox.checked = true;
    checkbox.dispatchEvent(new Event("change"));
    await wb.submit();
    const outcome = container.querySelector('.wb-outcome.stale[data-req-id="R3"]')!;
    expect(outcome.textContent).toContain("checklist stale, regenerate");
    expect(outcome.querySelector("button.wb-regenerate")).not.toBeNull();
  });
});

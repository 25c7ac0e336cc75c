// Application shell: tab navigation, actor name, offline banner, and a
// sequence poller so clients notice missed updates.

import { OfflineError, ReqbaseClient } from "./api.js";
import { clear, el } from "./dom.js";
import { DocumentBrowser } from "./documents.js";
import { ViewExplorer } from "./views.js";
import { ApprovalWorkbench } from "./workbench.js";

const POLL_MS = 5000;

export function mountApp(root: HTMLElement, client: ReqbaseClient): { stop: () => void } {
  clear(root);

  const offlineBanner = el("div", { class: "offline-banner", hidden: "hidden" }, "Service unreachable. Retrying...");
  const sequenceBadge = el("span", { class: "sequence-badge" }, "sequence 0");
  const actorInput = el("input", { class: "actor-input", placeholder: "your name (for writes)" }) as HTMLInputElement;
  actorInput.value = client.actor;
  actorInput.addEventListener("change", () => {
    client.actor = actorInput.value.trim();
  });

  client.onOffline = () => offlineBanner.removeAttribute("hidden");
  client.onSequence = (sequence) => {
    offlineBanner.setAttribute("hidden", "hidden");
    sequenceBadge.textContent = `sequence ${sequence}`;
  };

  const main = el("main", { class: "panel" });
  const browser = new DocumentBrowser(client, main);
  const explorer = new ViewExplorer(client, main);
  const workbench = new ApprovalWorkbench(client, main);

  const tabs: [string, () => Promise<void>][] = [
    ["Documents", () => browser.showList()],
    ["Views", () => explorer.mount()],
    ["Approvals", () => workbench.mount()],
  ];
  const nav = el("nav", { class: "tabs" });
  for (const [label, open] of tabs) {
    const button = el("button", { class: "tab", "data-tab": label.toLowerCase() }, label);
    button.addEventListener("click", () => {
      clear(main);
      void open().catch(() => offlineBanner.removeAttribute("hidden"));
    });
    nav.append(button);
  }

  root.append(
    el("header", { class: "topbar" },
      el("h1", {}, "reqbase"),
      nav,
      el("span", { class: "spacer" }),
      actorInput,
      sequenceBadge),
    offlineBanner,
    main,
  );
  void browser.showList().catch(() => offlineBanner.removeAttribute("hidden"));

  const timer = setInterval(() => {
    void client.getSequence().catch(() => undefined);
  }, POLL_MS);
  return { stop: () => clearInterval(timer) };
}

// Browser entry point. Served from /app/ by the reqbase service, so the API
// lives at the same origin.

import { ReqbaseClient } from "./api.js";
import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const client = new ReqbaseClient("", localStorage.getItem("reqbase-actor") ?? "");
  mountApp(root, client);
}

import { ApiClient } from "./api.js";
import { App } from "./app.js";

// When served from the API process at /ui the endpoints live at the origin
// root; a data-api-base attribute on <body> overrides for split hosting.
const base = document.body.dataset.apiBase ?? "";
const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app container");
}

const app = new App(new ApiClient(base), root);
void app.start();

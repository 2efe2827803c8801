// Browser entry point: read the connection settings, build the client and
// mount the app. The token is the only thing persisted locally.

import { ApiClient } from "./api";
import { createApp } from "./app";

const TOKEN_STORAGE_KEY = "kcpipe-token";
const DEFAULT_BASE_URL = "http://127.0.0.1:8000";

function start(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("mount point #app is missing from the page");
  }
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? DEFAULT_BASE_URL;
  const token = window.localStorage.getItem(TOKEN_STORAGE_KEY);

  const client = new ApiClient({ baseUrl, token });
  const app = createApp(root, client);
  void app.loadQueue();
  void app.loadDashboard();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}

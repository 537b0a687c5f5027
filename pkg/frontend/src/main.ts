import { ApiClient } from "./api.js";
import { AuditApp } from "./app.js";

// Served by the session service itself, so same-origin relative URLs work.
const root = document.getElementById("app");
if (root) {
  const app = new AuditApp(new ApiClient(""), root);
  void app.start();
}

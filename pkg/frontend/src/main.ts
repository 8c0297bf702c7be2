import { ApiClient } from "./api.js";
import { initApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  // served at /ui by the QA service; API routes live at the origin root
  void initApp(root, new ApiClient(""));
}

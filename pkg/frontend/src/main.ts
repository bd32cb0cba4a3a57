import { ConciergeApi } from "./api.js";
import { App } from "./app.js";

document.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const app = new App(root, new ConciergeApi(""));
  void app.start();
});

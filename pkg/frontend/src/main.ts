import { SearchClient } from "./client.js";
import { SearchDialog } from "./searchView.js";
import { renderSweep } from "./sweepView.js";

const params = new URLSearchParams(window.location.search);
const serverUrl = params.get("server") ?? "http://127.0.0.1:7777";

const searchRoot = document.getElementById("search-root");
if (searchRoot !== null) {
  new SearchDialog(searchRoot, new SearchClient(serverUrl));
}

const statusLine = document.getElementById("status-line");
if (statusLine !== null) {
  const refresh = async () => {
    try {
      const response = await fetch(`${serverUrl}/status`);
      const body = (await response.json()) as {
        item_count: number;
        dim: number;
        indexing: boolean;
      };
      statusLine.textContent =
        `${body.item_count} items, dim ${body.dim}` + (body.indexing ? ", indexing..." : "");
    } catch {
      statusLine.textContent = `server unreachable at ${serverUrl}`;
    }
  };
  void refresh();
  setInterval(() => void refresh(), 2000);
}

const sweepInput = document.getElementById("sweep-file") as HTMLInputElement | null;
const sweepRoot = document.getElementById("sweep-root");
if (sweepInput !== null && sweepRoot !== null) {
  sweepInput.addEventListener("change", () => {
    const file = sweepInput.files?.[0];
    if (file === undefined) return;
    void file.text().then((text) => renderSweep(sweepRoot, text));
  });
}

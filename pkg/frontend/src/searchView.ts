import { SearchClient } from "./client.js";
import { debounce } from "./debounce.js";
import { DonePayload, SearchHit } from "./types.js";

/** Search-everywhere style dialog: a query box with live results.

Interim hits render in arrival order while the scan runs; the terminal
`done` payload then replaces the list in its exact order. Kind group
headers are purely visual: they are inserted where the kind changes along
the list, never by re-sorting it.
*/
export class SearchDialog {
  readonly input: HTMLInputElement;
  readonly list: HTMLElement;
  readonly banner: HTMLElement;
  private readonly run: ((query: string) => void) & { cancel: () => void };
  private lastDone: DonePayload | null = null;

  constructor(
    root: HTMLElement,
    private readonly client: SearchClient,
    private readonly k = 10,
    debounceMs = 150,
  ) {
    this.input = document.createElement("input");
    this.input.type = "search";
    this.input.placeholder = "Search files, classes, symbols, actions";
    this.input.className = "search-input";
    this.banner = document.createElement("div");
    this.banner.className = "error-banner";
    this.banner.hidden = true;
    this.list = document.createElement("ul");
    this.list.className = "results";
    root.append(this.input, this.banner, this.list);

    this.run = debounce((query: string) => this.search(query), debounceMs);
    this.input.addEventListener("input", () => {
      const query = this.input.value;
      if (query === "") {
        this.run.cancel();
        this.client.cancel();
        this.clear();
        return;
      }
      this.run(query);
    });
  }

  private clear(): void {
    this.list.replaceChildren();
    this.banner.hidden = true;
    this.lastDone = null;
  }

  private search(query: string): void {
    this.banner.hidden = true;
    // the previous list stays on screen until this search produces
    // something, so a failing request never blanks the dialog
    let fresh = false;
    const reset = () => {
      if (!fresh) {
        fresh = true;
        this.list.replaceChildren();
      }
    };
    this.client.search(query, this.k, {
      onHit: (hit) => {
        reset();
        this.list.appendChild(renderRow(hit));
      },
      onDone: (done) => {
        reset();
        this.lastDone = done;
        this.renderDone(done);
      },
      onError: (error) => {
        this.banner.textContent = `search failed: ${error.message}`;
        this.banner.hidden = false;
      },
    });
  }

  /** Rendering is a pure function of the done payload. */
  private renderDone(done: DonePayload): void {
    this.list.replaceChildren();
    let previousKind: string | null | undefined;
    for (const hit of done.results) {
      if (hit.kind !== previousKind) {
        previousKind = hit.kind;
        const header = document.createElement("li");
        header.className = "group-header";
        header.textContent = hit.kind ?? "other";
        this.list.appendChild(header);
      }
      this.list.appendChild(renderRow(hit));
    }
    if (done.results.length === 0) {
      const empty = document.createElement("li");
      empty.className = "empty";
      empty.textContent = "no results";
      this.list.appendChild(empty);
    }
    if (done.warning) {
      this.banner.textContent = done.warning;
      this.banner.hidden = false;
    }
  }

  /** Item ids currently rendered, in display order (headers excluded). */
  renderedIds(): string[] {
    return Array.from(this.list.querySelectorAll<HTMLElement>("li.result")).map(
      (row) => row.dataset.itemId ?? "",
    );
  }

  get donePayload(): DonePayload | null {
    return this.lastDone;
  }
}

export function renderRow(hit: SearchHit): HTMLLIElement {
  const row = document.createElement("li");
  row.className = "result";
  row.dataset.itemId = hit.item_id;

  const name = document.createElement("span");
  name.className = "name";
  name.textContent = hit.name;

  const kind = document.createElement("span");
  kind.className = `badge kind kind-${hit.kind ?? "unknown"}`;
  kind.textContent = hit.kind ?? "?";

  const score = document.createElement("span");
  score.className = "score";
  score.textContent = hit.score === null ? "" : hit.score.toFixed(3);

  const source = document.createElement("span");
  source.className = `badge source source-${hit.source}`;
  source.textContent = hit.source;

  row.append(name, kind, score, source);
  return row;
}

import { EventStreamParser, StreamEvent } from "./sse.js";
import { DonePayload, SearchHandlers, SearchHit } from "./types.js";

/** Transport = how raw stream events are fetched; injectable for tests. */
export type Transport = (
  url: string,
  signal: AbortSignal,
  onEvent: (event: StreamEvent) => void,
) => Promise<void>;

/** Real transport: streaming fetch plus event-stream parsing. */
export const fetchTransport: Transport = async (url, signal, onEvent) => {
  const response = await fetch(url, { signal, headers: { Accept: "text/event-stream" } });
  if (!response.ok) {
    throw new Error(`search failed: HTTP ${response.status}`);
  }
  if (response.body === null) {
    throw new Error("search failed: empty response body");
  }
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  const parser = new EventStreamParser();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    for (const event of parser.push(decoder.decode(value, { stream: true }))) {
      onEvent(event);
    }
  }
};

/** Issues /search requests, keeping at most one in flight.

Starting a new search aborts the previous one; events from an aborted
request never reach the handlers.
*/
export class SearchClient {
  private inflight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly transport: Transport = fetchTransport,
  ) {}

  cancel(): void {
    if (this.inflight !== null) {
      this.inflight.abort();
      this.inflight = null;
    }
  }

  search(query: string, k: number, handlers: SearchHandlers): void {
    this.cancel();
    const controller = new AbortController();
    this.inflight = controller;
    const url =
      `${this.baseUrl}/search?q=${encodeURIComponent(query)}&k=${encodeURIComponent(k)}`;
    const deliver = (event: StreamEvent) => {
      if (controller.signal.aborted) return;
      if (event.event === "hit") {
        handlers.onHit(JSON.parse(event.data) as SearchHit);
      } else if (event.event === "done") {
        handlers.onDone(JSON.parse(event.data) as DonePayload);
      }
    };
    this.transport(url, controller.signal, deliver)
      .catch((error: unknown) => {
        if (controller.signal.aborted) return; // superseded, stay quiet
        handlers.onError(error instanceof Error ? error : new Error(String(error)));
      })
      .finally(() => {
        if (this.inflight === controller) {
          this.inflight = null;
        }
      });
  }

  /** True while a request is outstanding (not yet done or aborted). */
  get busy(): boolean {
    return this.inflight !== null;
  }
}

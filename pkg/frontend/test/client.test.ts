import { describe, expect, it, vi } from "vitest";

import { SearchClient } from "../src/client.js";
import { EventStreamParser } from "../src/sse.js";
import { DonePayload, SearchHit } from "../src/types.js";
import { MockTransport, doneEvent, hit, hitEvent } from "./mock.js";

function collector() {
  const hits: SearchHit[] = [];
  const dones: DonePayload[] = [];
  const errors: Error[] = [];
  return {
    hits,
    dones,
    errors,
    handlers: {
      onHit: (h: SearchHit) => hits.push(h),
      onDone: (d: DonePayload) => dones.push(d),
      onError: (e: Error) => errors.push(e),
    },
  };
}

describe("EventStreamParser", () => {
  it("reassembles events across chunk boundaries", () => {
    const parser = new EventStreamParser();
    const events = [
      ...parser.push("event: hit\nda"),
      ...parser.push('ta: {"a":1}\n\nevent: done\n'),
      ...parser.push('data: {"b":2}\n\n'),
    ];
    expect(events).toEqual([
      { event: "hit", data: '{"a":1}' },
      { event: "done", data: '{"b":2}' },
    ]);
  });
});

describe("SearchClient", () => {
  it("streams hits then the done payload", () => {
    const mock = new MockTransport();
    const client = new SearchClient("http://x", mock.transport);
    const got = collector();
    client.search("open file", 10, got.handlers);
    expect(mock.last.url).toBe("http://x/search?q=open%20file&k=10");
    const a = hit("a");
    mock.last.emit(hitEvent(a));
    expect(got.hits).toEqual([a]);
    mock.last.emit(doneEvent([a]));
    mock.last.finish();
    expect(got.dones).toEqual([{ results: [a] }]);
    expect(got.errors).toEqual([]);
  });

  it("aborts the previous request when a new one starts", () => {
    const mock = new MockTransport();
    const client = new SearchClient("http://x", mock.transport);
    const first = collector();
    const second = collector();
    client.search("op", 10, first.handlers);
    client.search("open", 10, second.handlers);
    expect(mock.calls).toHaveLength(2);
    expect(mock.calls[0].signal.aborted).toBe(true);
    expect(mock.uncancelled()).toHaveLength(1);
    // late events from the aborted request are dropped silently
    mock.calls[0].emit(hitEvent(hit("stale")));
    expect(first.hits).toEqual([]);
    expect(first.errors).toEqual([]);
    mock.calls[1].emit(doneEvent([hit("fresh")]));
    expect(second.dones[0].results[0].item_id).toBe("fresh");
  });

  it("reports transport failures", async () => {
    const mock = new MockTransport();
    const client = new SearchClient("http://x", mock.transport);
    const got = collector();
    client.search("q", 5, got.handlers);
    mock.last.fail(new Error("connection refused"));
    await vi.waitFor(() => expect(got.errors).toHaveLength(1));
    expect(got.errors[0].message).toContain("connection refused");
  });

  it("cancel() silences an in-flight request", async () => {
    const mock = new MockTransport();
    const client = new SearchClient("http://x", mock.transport);
    const got = collector();
    client.search("q", 5, got.handlers);
    expect(client.busy).toBe(true);
    client.cancel();
    await vi.waitFor(() => expect(client.busy).toBe(false));
    expect(got.errors).toEqual([]);
    expect(got.dones).toEqual([]);
  });
});

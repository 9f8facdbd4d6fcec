/** Incremental parser for text/event-stream bodies.

Feed it decoded chunks as they arrive; it returns the events completed by
each chunk. An event is `event:` and `data:` lines followed by a blank
line, matching the server's framing exactly.
*/
export interface StreamEvent {
  event: string;
  data: string;
}

export class EventStreamParser {
  private buffer = "";
  private eventName = "";
  private dataLines: string[] = [];

  push(chunk: string): StreamEvent[] {
    this.buffer += chunk;
    const events: StreamEvent[] = [];
    for (;;) {
      const newline = this.buffer.indexOf("\n");
      if (newline < 0) break;
      const line = this.buffer.slice(0, newline);
      this.buffer = this.buffer.slice(newline + 1);
      if (line === "") {
        if (this.dataLines.length > 0 || this.eventName !== "") {
          events.push({ event: this.eventName, data: this.dataLines.join("\n") });
        }
        this.eventName = "";
        this.dataLines = [];
      } else if (line.startsWith("event: ")) {
        this.eventName = line.slice("event: ".length);
      } else if (line.startsWith("data: ")) {
        this.dataLines.push(line.slice("data: ".length));
      }
      // other fields (id:, retry:, comments) are ignored
    }
    return events;
  }
}

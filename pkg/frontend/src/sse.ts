// Server-push reader over fetch streaming. Works in the browser and in
// Node 20 (the e2e tests), unlike the EventSource global.

import type { ServerEvent } from "./types.js";

export class SseParser {
  private buffer = "";

  // Feed a chunk of the text stream; returns completed events.
  push(chunk: string): ServerEvent[] {
    this.buffer += chunk;
    const events: ServerEvent[] = [];
    let index: number;
    while ((index = this.buffer.indexOf("\n\n")) >= 0) {
      const frame = this.buffer.slice(0, index);
      this.buffer = this.buffer.slice(index + 2);
      const data = frame
        .split("\n")
        .filter((line) => line.startsWith("data: "))
        .map((line) => line.slice(6))
        .join("\n");
      if (!data) continue; // comment/keepalive frame
      try {
        events.push(JSON.parse(data) as ServerEvent);
      } catch {
        // Malformed frame: skip rather than kill the stream.
      }
    }
    return events;
  }
}

export type StreamHandle = { close: () => void; done: Promise<void> };

export function openEventStream(
  url: string,
  onEvent: (event: ServerEvent) => void,
  onError?: (err: unknown) => void,
): StreamHandle {
  const controller = new AbortController();
  const parser = new SseParser();

  const done = (async () => {
    try {
      const response = await fetch(url, {
        signal: controller.signal,
        headers: { Accept: "text/event-stream" },
      });
      if (!response.ok || !response.body) {
        throw new Error(`event stream failed: HTTP ${response.status}`);
      }
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      for (;;) {
        const { done: finished, value } = await reader.read();
        if (finished) break;
        for (const event of parser.push(decoder.decode(value, { stream: true }))) {
          onEvent(event);
        }
      }
    } catch (err) {
      if (!controller.signal.aborted && onError) onError(err);
    }
  })();

  return { close: () => controller.abort(), done };
}

import { describe, expect, it } from "vitest";

import { SseParser } from "../src/sse.js";

describe("SseParser", () => {
  it("parses a single frame", () => {
    const parser = new SseParser();
    const events = parser.push('data: {"type":"message","payload":{"text":"hi"}}\n\n');
    expect(events).toHaveLength(1);
    expect(events[0].type).toBe("message");
  });

  it("handles frames split across chunks", () => {
    const parser = new SseParser();
    expect(parser.push('data: {"type":"state_ch')).toHaveLength(0);
    const events = parser.push('anged","payload":{}}\n\ndata: {"type":"message","payload":{}}\n\n');
    expect(events.map((e) => e.type)).toEqual(["state_changed", "message"]);
  });

  it("ignores keepalive comments and blank frames", () => {
    const parser = new SseParser();
    expect(parser.push(": keepalive\n\n\n\n")).toHaveLength(0);
  });

  it("skips malformed JSON without dying", () => {
    const parser = new SseParser();
    expect(parser.push("data: {nope\n\n")).toHaveLength(0);
    expect(parser.push('data: {"type":"message","payload":{}}\n\n')).toHaveLength(1);
  });

  it("joins multi-line data fields", () => {
    const parser = new SseParser();
    const events = parser.push('data: {"type":"message",\ndata: "payload":{}}\n\n');
    expect(events).toHaveLength(1);
  });
});

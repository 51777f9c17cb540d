import { describe, expect, it } from "vitest";

import { applyAll, applyEvent, initialState } from "../src/state.js";
import { renderApp } from "../src/render.js";
import { emptyForm, type ServerEvent } from "../src/types.js";
import { makeSnapshot, packFunction, stateChanged } from "./helpers.js";

const local = {
  form: emptyForm(),
  preview: null,
  utterance: "",
  testUtterance: "",
  error: null,
};

describe("reducer", () => {
  it("replaces the snapshot on state_changed", () => {
    const snap = makeSnapshot({ state: "planning" });
    const next = applyEvent(initialState, stateChanged(snap));
    expect(next.snapshot).toEqual(snap);
  });

  it("keeps the snapshot for cosmetic events", () => {
    const snap = makeSnapshot();
    const withSnap = applyEvent(initialState, stateChanged(snap));
    const after = applyEvent(withSnap, {
      type: "execution_event",
      payload: { kind: "moved", subject: "SKITTLES" },
    });
    expect(after.snapshot).toEqual(snap);
  });
});

describe("refresh safety", () => {
  it("reconstructs identical rendered state from snapshot + subsequent events", () => {
    // a session timeline: teach pack, go live, plan pending, executed
    const timeline: ServerEvent[] = [
      stateChanged(makeSnapshot()),
      { type: "message", payload: { role: "system", text: "learned pack(food: ObjectRef)" } },
      stateChanged(makeSnapshot({
        api: { functions: [...makeSnapshot().api.functions, packFunction] },
        messages: [{ role: "system", text: "learned pack(food: ObjectRef)" }],
      })),
      stateChanged(makeSnapshot({
        mode: "live",
        api: { functions: [...makeSnapshot().api.functions, packFunction] },
        messages: [{ role: "system", text: "learned pack(food: ObjectRef)" }],
      })),
      { type: "suggestion", payload: { plan: "pack(SKITTLES)", gloss: "Should I pack the Skittles next?" } },
      stateChanged(makeSnapshot({
        mode: "live",
        state: "awaiting_confirmation",
        api: { functions: [...makeSnapshot().api.functions, packFunction] },
        pending: { origin: "robot-proactive", plan: "pack(SKITTLES)", gloss: "Should I pack the Skittles next?" },
        messages: [{ role: "system", text: "learned pack(food: ObjectRef)" }],
      })),
    ];

    // client A watched everything from the beginning
    const fullStream = applyAll(initialState, timeline);

    // client B "reloads" mid-session: it starts from the snapshot the
    // server would hand it at that point, then replays later events only
    for (let reloadAt = 1; reloadAt < timeline.length; reloadAt++) {
      const snapshotsBefore = timeline
        .slice(0, reloadAt)
        .filter((e) => e.type === "state_changed");
      if (snapshotsBefore.length === 0) continue;
      const bootstrap = snapshotsBefore[snapshotsBefore.length - 1];
      const reloaded = applyAll(
        applyEvent(initialState, bootstrap),
        timeline.slice(reloadAt),
      );
      expect(renderApp(reloaded.snapshot, local, null, true)).toBe(
        renderApp(fullStream.snapshot, local, null, true),
      );
    }
  });
});

import type { FunctionInfo, ServerEvent, Snapshot } from "../src/types.js";

export const baseFunctions: FunctionInfo[] = [
  { name: "goto", signature: "goto(obj: ObjectRef)", doc: "Move the gripper directly above the given object.", params: ["obj"], base: true, body: null },
  { name: "pickup", signature: "pickup(obj: ObjectRef)", doc: "Pick up the given object with the gripper.", params: ["obj"], base: true, body: null },
  { name: "release", signature: "release()", doc: "Release the held object, dropping it into a container if one is below.", params: [], base: true, body: null },
  { name: "open_gripper", signature: "open_gripper()", doc: "Open the gripper.", params: [], base: true, body: null },
  { name: "close_gripper", signature: "close_gripper()", doc: "Close the gripper, grasping an object directly beneath if present.", params: [], base: true, body: null },
];

export const packFunction: FunctionInfo = {
  name: "pack",
  signature: "pack(food: ObjectRef)",
  doc: "packing food for lunch",
  params: ["food"],
  base: false,
  body: ["pickup($food)", "goto(LUNCH_BAG)", "release()"],
};

export function makeSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    mode: "meta-prompting",
    state: "idle",
    goal: "",
    proactive: true,
    objects: [
      { id: "LUNCH_BAG", display_name: "lunch bag", container: true, position: [0.4, 0.3, 0.0] },
      { id: "SKITTLES", display_name: "Skittles", container: false, position: [-0.3, 0.2, 0.02] },
      { id: "GUMMIES", display_name: "gummy candy", container: false, position: [0.1, 0.2, 0.02] },
    ],
    api: { functions: [...baseFunctions] },
    world: {
      clock: 0,
      poses: {
        LUNCH_BAG: [0.4, 0.3, 0.0],
        SKITTLES: [-0.3, 0.2, 0.02],
        GUMMIES: [0.1, 0.2, 0.02],
      },
      inside: {},
      gripper: { position: [0, 0, 0.4], open: true, holding: null },
    },
    pending: null,
    messages: [],
    history: [],
    metrics: {
      total_time: 0,
      user_initiated: 0,
      robot_initiated: 0,
      robot_initiated_accepted: 0,
      time_breakdown: { instructing: 0, executing: 0, confirming: 0, idle: 0 },
    },
    ...overrides,
  };
}

export function stateChanged(snapshot: Snapshot): ServerEvent {
  return { type: "state_changed", payload: snapshot as unknown as Record<string, unknown> };
}

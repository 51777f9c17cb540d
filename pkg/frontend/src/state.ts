// UI state reducer. The server snapshot is the single source of truth:
// every state_changed event carries a full snapshot, and every semantic
// mutation is followed by one, so a client that connects mid-session (or
// reloads) converges to the same rendered view from snapshot + replay.

import type { ServerEvent, Snapshot } from "./types.js";

export type UiState = {
  snapshot: Snapshot | null;
  connected: boolean;
};

export const initialState: UiState = { snapshot: null, connected: false };

export function applyEvent(state: UiState, event: ServerEvent): UiState {
  if (event.type === "state_changed") {
    return { ...state, snapshot: event.payload as unknown as Snapshot };
  }
  // suggestion / execution_event / message frames are cosmetic triggers;
  // their content is already (or about to be) part of the next snapshot.
  return state;
}

export function applyAll(state: UiState, events: ServerEvent[]): UiState {
  return events.reduce(applyEvent, state);
}

export function setConnected(state: UiState, connected: boolean): UiState {
  return state.connected === connected ? state : { ...state, connected };
}

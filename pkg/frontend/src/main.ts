// Browser wiring: event delegation over the rendered HTML, REST mutations,
// and a reconnecting event stream that feeds the reducer.

import { ApiClient, ApiError } from "./api.js";
import { renderApp, type LocalState } from "./render.js";
import { applyEvent, initialState, setConnected, type UiState } from "./state.js";
import { openEventStream } from "./sse.js";
import { emptyForm, type Snapshot } from "./types.js";

const api = new ApiClient("");
const root = document.getElementById("app")!;

let state: UiState = initialState;
let local: LocalState = {
  form: emptyForm(),
  preview: null,
  utterance: "",
  testUtterance: "",
  error: null,
};
let editing: string | null = null;
let sessionId = new URLSearchParams(location.search).get("session") ?? "";

function snapshot(): Snapshot | null {
  return state.snapshot;
}

function render() {
  root.innerHTML = renderApp(state.snapshot, local, editing, state.connected);
}

function update(next: UiState) {
  state = next;
  render();
}

async function mutate(action: () => Promise<unknown>) {
  local.error = null;
  try {
    await action();
    // The event stream delivers the authoritative snapshot; also refetch in
    // case this tab's stream is catching up.
    update({ ...state, snapshot: await api.getSession(sessionId) });
  } catch (err) {
    local.error = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    render();
  }
}

function readInput(selector: string): string {
  const el = root.querySelector<HTMLInputElement>(selector);
  return el ? el.value : "";
}

function syncFormFromInputs() {
  local.form.name = readInput('[data-field="fn-name"]') || local.form.name;
  local.form.behavior = readInput('[data-field="fn-behavior"]') || local.form.behavior;
  root.querySelectorAll<HTMLSelectElement>('[data-field="step-function"]').forEach((el) => {
    const index = Number(el.dataset.step);
    if (local.form.steps[index]) {
      if (local.form.steps[index].function !== el.value) {
        local.form.steps[index] = { function: el.value, args: [] };
      }
    }
  });
  root.querySelectorAll<HTMLSelectElement>('[data-field="step-arg"]').forEach((el) => {
    const index = Number(el.dataset.step);
    const slot = Number(el.dataset.slot);
    if (local.form.steps[index]) local.form.steps[index].args[slot] = el.value;
  });
}

function startEditing(name: string) {
  const fn = snapshot()?.api.functions.find((f) => f.name === name);
  if (!fn || fn.base) return;
  editing = name;
  local.form = {
    name: fn.name,
    behavior: fn.doc,
    params: [...fn.params],
    steps: (fn.body ?? []).map(parseBodyStep),
  };
  render();
}

// "pickup($obj)" -> { function: "pickup", args: ["$obj"] }; display-only
// convenience for pre-filling the edit form with a server-provided body.
function parseBodyStep(step: string): { function: string; args: string[] } {
  const match = /^([a-z][a-z0-9_]*)\((.*)\)$/.exec(step.trim());
  if (!match) return { function: step, args: [] };
  const args = match[2].trim() ? match[2].split(",").map((a) => a.trim()) : [];
  return { function: match[1], args };
}

async function handleAction(action: string, target: HTMLElement) {
  const snap = snapshot();
  if (!snap) return;
  switch (action) {
    case "save-goal":
      await mutate(() => api.setGoal(sessionId, readInput('[data-field="goal"]')));
      break;
    case "go-live":
      await mutate(() => api.toLive(sessionId));
      break;
    case "export": {
      const text = await api.exportContext(sessionId);
      const blob = new Blob([text], { type: "application/json" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = "context.json";
      link.click();
      URL.revokeObjectURL(link.href);
      break;
    }
    case "add-param": {
      syncFormFromInputs();
      const name = readInput('[data-field="new-param"]').trim();
      if (name) local.form.params.push(name);
      render();
      break;
    }
    case "remove-param": {
      syncFormFromInputs();
      local.form.params.splice(Number(target.dataset.index), 1);
      render();
      break;
    }
    case "add-step": {
      syncFormFromInputs();
      const first = snap.api.functions[0];
      local.form.steps.push({ function: first ? first.name : "goto", args: [] });
      render();
      break;
    }
    case "remove-step": {
      syncFormFromInputs();
      local.form.steps.splice(Number(target.dataset.step), 1);
      render();
      break;
    }
    case "submit-teach": {
      syncFormFromInputs();
      const form = local.form;
      await mutate(async () => {
        if (editing) {
          await api.editFunction(sessionId, editing, form);
        } else {
          await api.teachForm(sessionId, form);
        }
        editing = null;
        local.form = emptyForm();
      });
      break;
    }
    case "cancel-edit":
      editing = null;
      local.form = emptyForm();
      render();
      break;
    case "edit-fn":
      startEditing(target.dataset.name ?? "");
      break;
    case "delete-fn":
      await mutate(() => api.deleteFunction(sessionId, target.dataset.name ?? ""));
      break;
    case "test-utterance": {
      local.testUtterance = readInput('[data-field="test-utterance"]');
      local.error = null;
      try {
        local.preview = await api.testUtterance(sessionId, local.testUtterance);
      } catch (err) {
        local.error = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
      }
      render();
      break;
    }
    case "send-utterance": {
      local.utterance = readInput('[data-field="utterance"]');
      const text = local.utterance;
      local.utterance = "";
      await mutate(() => api.utterance(sessionId, text));
      break;
    }
    case "confirm":
      await mutate(() => api.confirm(sessionId));
      break;
    case "reject":
      await mutate(() => api.reject(sessionId));
      break;
  }
}

function connectStream() {
  const handle = openEventStream(
    api.eventsUrl(sessionId),
    (event) => update(applyEvent(state, event)),
    () => {
      update(setConnected(state, false));
      setTimeout(connectStream, 1500); // reconnect; snapshot replay catches us up
    },
  );
  update(setConnected(state, true));
  return handle;
}

async function boot() {
  if (!sessionId) {
    const created = await api.createSession({ mode: "meta-prompting" });
    sessionId = created.session_id;
    const url = new URL(location.href);
    url.searchParams.set("session", sessionId);
    history.replaceState(null, "", url.toString());
  }
  update({ ...state, snapshot: await api.getSession(sessionId) });
  connectStream();

  root.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) return;
    event.preventDefault();
    void handleAction(target.dataset.action!, target);
  });
  root.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key !== "Enter") return;
    const field = (event.target as HTMLElement).closest<HTMLElement>("[data-field]");
    if (!field) return;
    event.preventDefault();
    const fieldName = field.dataset.field;
    if (fieldName === "utterance") void handleAction("send-utterance", field);
    if (fieldName === "test-utterance") void handleAction("test-utterance", field);
    if (fieldName === "goal") void handleAction("save-goal", field);
  });
}

void boot();

// Pure HTML renderers. Everything shown is derived from the server
// snapshot plus ephemeral local form state; no plan text is ever
// constructed on the client.

import type {
  FormStep,
  FunctionInfo,
  MetricsInfo,
  ObjectInfo,
  PendingInfo,
  Snapshot,
  StepInfo,
  TeachFormModel,
  WorldInfo,
} from "./types.js";
import type { PreviewResult } from "./api.js";

export type LocalState = {
  form: TeachFormModel;
  preview: PreviewResult | null;
  utterance: string;
  testUtterance: string;
  error: string | null;
};

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const esc = escapeHtml;

function option(value: string, label: string, selected: boolean): string {
  return `<option value="${esc(value)}"${selected ? " selected" : ""}>${esc(label)}</option>`;
}

// -- shared fragments --------------------------------------------------------

export function renderApiListing(functions: FunctionInfo[]): string {
  const rows = functions
    .map((fn) => {
      const tag = fn.base
        ? `<span class="tag tag-base">base</span>`
        : `<span class="tag tag-taught">taught</span>`;
      const controls = fn.base
        ? ""
        : `<button data-action="edit-fn" data-name="${esc(fn.name)}">edit</button>
           <button data-action="delete-fn" data-name="${esc(fn.name)}">delete</button>`;
      const body = fn.body
        ? `<div class="fn-body"><code>${esc(fn.body.join("; "))}</code></div>`
        : "";
      return `<li class="fn-row" data-fn="${esc(fn.name)}">
        <code class="fn-sig">${esc(fn.signature)}</code> ${tag}
        <span class="fn-doc">${esc(fn.doc)}</span>
        ${body}
        <span class="fn-controls">${controls}</span>
      </li>`;
    })
    .join("\n");
  return `<ul class="api-listing">${rows}</ul>`;
}

export function renderMetricsStrip(metrics: MetricsInfo): string {
  const accepted = metrics.robot_initiated_accepted;
  return `<div class="metrics-strip">
    <span class="metric">user plans <b data-metric="user">${metrics.user_initiated}</b></span>
    <span class="metric">robot plans <b data-metric="robot">${metrics.robot_initiated}</b>
      (accepted <b data-metric="accepted">${accepted}</b>)</span>
    <span class="metric">elapsed <b data-metric="elapsed">${metrics.total_time.toFixed(1)}</b> s</span>
  </div>`;
}

export function renderWorld(world: WorldInfo, objects: ObjectInfo[]): string {
  // Top-down view: x right, y up, workspace roughly [-0.6, 0.6]^2 meters.
  const scale = 220;
  const size = 300;
  const cx = (x: number) => size / 2 + x * scale;
  const cy = (y: number) => size / 2 - y * scale;
  const byId = new Map(objects.map((o) => [o.id, o]));
  const shapes: string[] = [];
  for (const [id, pose] of Object.entries(world.poses)) {
    const info = byId.get(id);
    const label = esc(id);
    if (info?.container) {
      const contents = Object.entries(world.inside)
        .filter(([, c]) => c === id)
        .map(([o]) => o);
      shapes.push(
        `<rect class="obj container" data-object="${label}" x="${cx(pose[0]) - 28}" y="${cy(pose[1]) - 20}" width="56" height="40" rx="6"></rect>`,
        `<text class="obj-label" x="${cx(pose[0])}" y="${cy(pose[1]) - 26}">${label}</text>`,
        `<text class="obj-contents" x="${cx(pose[0])}" y="${cy(pose[1]) + 4}">${esc(contents.join(", ")) || "empty"}</text>`,
      );
    } else {
      shapes.push(
        `<circle class="obj item" data-object="${label}" cx="${cx(pose[0])}" cy="${cy(pose[1])}" r="9"></circle>`,
        `<text class="obj-label" x="${cx(pose[0])}" y="${cy(pose[1]) - 14}">${label}</text>`,
      );
    }
  }
  const g = world.gripper;
  const gx = cx(g.position[0]);
  const gy = cy(g.position[1]);
  const held = g.holding ? ` holding ${esc(g.holding)}` : "";
  shapes.push(
    `<g class="gripper${g.open ? " open" : ""}" data-holding="${esc(g.holding ?? "")}">
      <line x1="${gx - 10}" y1="${gy}" x2="${gx + 10}" y2="${gy}"></line>
      <line x1="${gx}" y1="${gy - 10}" x2="${gx}" y2="${gy + 10}"></line>
    </g>`,
    `<text class="gripper-label" x="${gx}" y="${gy + 22}">gripper${held}</text>`,
  );
  return `<svg class="world" viewBox="0 0 ${size} ${size}" role="img" aria-label="workspace">
    <rect class="workspace" x="4" y="4" width="${size - 8}" height="${size - 8}" rx="10"></rect>
    ${shapes.join("\n")}
  </svg>`;
}

function renderStep(step: StepInfo): string {
  const who = step.initiator === "user" ? "you" : "robot";
  const status =
    step.execution.status === "completed"
      ? ""
      : ` <span class="step-status">(${esc(step.execution.status)}${
          step.confirmation === "rejected" ? ", rejected" : ""
        })</span>`;
  const utterance = step.utterance
    ? `<div class="step-utterance">${esc(step.utterance)}</div>`
    : "";
  const label = step.kind === "teach" ? `${esc(step.annotation)}: ` : "";
  return `<li class="step step-${esc(step.initiator)}">
    <span class="step-who">${who}</span>
    ${utterance}
    <div class="step-plan">${label}<code>${esc(step.plan)}</code>${status}</div>
  </li>`;
}

export function renderHistory(snapshot: Snapshot): string {
  const steps = snapshot.history.map(renderStep).join("\n");
  const bubbles = snapshot.messages
    .map(
      (m) =>
        `<li class="bubble bubble-${esc(m.role)}"><span>${esc(m.text)}</span></li>`,
    )
    .join("\n");
  return `<div class="history">
    <ul class="steps">${steps}</ul>
    <ul class="bubbles">${bubbles}</ul>
  </div>`;
}

export function renderSuggestionCard(pending: PendingInfo): string {
  if (!pending) return "";
  const title =
    pending.origin === "robot-proactive" ? "Robot suggestion" : "Confirm your plan";
  return `<div class="suggestion-card" data-origin="${esc(pending.origin)}">
    <div class="suggestion-title">${title}</div>
    <div class="suggestion-gloss">${esc(pending.gloss)}</div>
    <code class="suggestion-plan">${esc(pending.plan)}</code>
    <div class="suggestion-actions">
      <button class="confirm" data-action="confirm">Confirm</button>
      <button class="reject" data-action="reject">Reject</button>
    </div>
  </div>`;
}

// -- teach form -----------------------------------------------------------------

function argChoices(objects: ObjectInfo[], params: string[], selected: string): string {
  const objectOptions = objects.map((o) => option(o.id, o.id, selected === o.id));
  const paramOptions = params.map((p) => option(`$${p}`, `$${p} (parameter)`, selected === `$${p}`));
  return [...paramOptions, ...objectOptions].join("");
}

export function renderTeachForm(
  form: TeachFormModel,
  functions: FunctionInfo[],
  objects: ObjectInfo[],
  editing: string | null,
): string {
  const arity = new Map(functions.map((f) => [f.name, f.params.length]));
  const stepRows = form.steps
    .map((step: FormStep, index: number) => {
      const fnOptions = functions
        .map((f) => option(f.name, f.signature, f.name === step.function))
        .join("");
      const slots = Array.from({ length: arity.get(step.function) ?? 0 }, (_, slot) => {
        const value = step.args[slot] ?? "";
        return `<select data-field="step-arg" data-step="${index}" data-slot="${slot}">
          ${option("", "choose…", value === "")}${argChoices(objects, form.params, value)}
        </select>`;
      }).join("");
      return `<div class="form-step" data-step="${index}">
        <span class="form-step-index">${index + 1}.</span>
        <select data-field="step-function" data-step="${index}">${fnOptions}</select>
        ${slots}
        <button data-action="remove-step" data-step="${index}">×</button>
      </div>`;
    })
    .join("\n");
  const paramChips = form.params
    .map(
      (p, index) =>
        `<span class="param-chip">$${esc(p)}
          <button data-action="remove-param" data-index="${index}">×</button></span>`,
    )
    .join("");
  const heading = editing ? `Edit ${esc(editing)}` : "Teach a new behavior";
  const submit = editing ? "Save changes" : "Teach";
  return `<form class="teach-form" data-editing="${esc(editing ?? "")}">
    <h3>${heading}</h3>
    <label>Name <input data-field="fn-name" value="${esc(form.name)}" placeholder="pack"${editing ? " readonly" : ""}></label>
    <label>Expected behavior <input data-field="fn-behavior" value="${esc(form.behavior)}" placeholder="packing food for lunch"></label>
    <div class="params-row">
      Parameters: ${paramChips}
      <input data-field="new-param" placeholder="food">
      <button data-action="add-param">add parameter</button>
    </div>
    <div class="steps-builder">${stepRows}</div>
    <button data-action="add-step">add step</button>
    <button class="primary" data-action="submit-teach">${submit}</button>
    ${editing ? `<button data-action="cancel-edit">cancel</button>` : ""}
  </form>`;
}

// -- screens -----------------------------------------------------------------------

function renderPreview(preview: PreviewResult | null): string {
  if (!preview) return `<div class="preview empty">no preview yet</div>`;
  if (preview.outcome === "plan") {
    return `<div class="preview"><code class="preview-plan">${esc(preview.plan ?? "")}</code></div>`;
  }
  if (preview.outcome === "done") {
    return `<div class="preview">planner: nothing to do (DONE)</div>`;
  }
  return `<div class="preview clarification">planner asks: ${esc(preview.message)}</div>`;
}

export function renderMetaScreen(snapshot: Snapshot, local: LocalState, editing: string | null): string {
  return `<section class="screen meta-screen">
    <div class="column">
      <h3>GOAL</h3>
      <div class="goal-row">
        <input data-field="goal" value="${esc(snapshot.goal)}" placeholder="Pack my kids' lunch with …">
        <button data-action="save-goal">Save goal</button>
      </div>
      <h3>API</h3>
      ${renderApiListing(snapshot.api.functions)}
      <div class="meta-actions">
        <button data-action="export">Export context</button>
        <button class="primary" data-action="go-live">Start live session</button>
      </div>
    </div>
    <div class="column">
      ${renderTeachForm(local.form, snapshot.api.functions, snapshot.objects, editing)}
      <h3>Test an utterance</h3>
      <div class="test-row">
        <input data-field="test-utterance" value="${esc(local.testUtterance)}" placeholder="Put the cereal bar in my lunch.">
        <button data-action="test-utterance">Preview plan</button>
      </div>
      ${renderPreview(local.preview)}
      ${renderHistory(snapshot)}
    </div>
  </section>`;
}

export function renderLiveScreen(snapshot: Snapshot, local: LocalState): string {
  const doneBanner =
    snapshot.state === "done"
      ? `<div class="done-banner">goal complete — nothing left to pack</div>`
      : "";
  return `<section class="screen live-screen">
    <div class="column">
      ${renderWorld(snapshot.world, snapshot.objects)}
      ${renderMetricsStrip(snapshot.metrics)}
      ${doneBanner}
    </div>
    <div class="column">
      ${renderSuggestionCard(snapshot.pending)}
      <div class="utterance-row">
        <input data-field="utterance" value="${esc(local.utterance)}" placeholder="pack the skittles"
          ${snapshot.state !== "idle" ? "disabled" : ""}>
        <button data-action="send-utterance" ${snapshot.state !== "idle" ? "disabled" : ""}>Send</button>
      </div>
      ${renderHistory(snapshot)}
      <div class="meta-actions">
        <button data-action="export">Export context</button>
      </div>
    </div>
  </section>`;
}

export function renderApp(snapshot: Snapshot | null, local: LocalState,
                          editing: string | null, connected: boolean): string {
  if (!snapshot) {
    return `<div class="loading">connecting…</div>`;
  }
  const error = local.error ? `<div class="error-banner">${esc(local.error)}</div>` : "";
  const screen =
    snapshot.mode === "meta-prompting"
      ? renderMetaScreen(snapshot, local, editing)
      : renderLiveScreen(snapshot, local);
  return `<header class="topbar">
    <span class="brand">provox console</span>
    <span class="mode-badge">${esc(snapshot.mode)}</span>
    <span class="state-badge" data-state="${esc(snapshot.state)}">${esc(snapshot.state)}</span>
    <span class="conn ${connected ? "on" : "off"}" title="event stream"></span>
  </header>
  ${error}
  ${screen}`;
}

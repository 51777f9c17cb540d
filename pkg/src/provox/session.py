"""Interaction state machine: meta-prompting, live gating, history, metrics.

A session owns the world, the function registry, the goal text, and an
append-only history of interaction steps. In meta-prompting mode the user
shapes the goal and registry and previews plans without ever touching the
world; in live mode utterances and proactive suggestions produce plans that
execute only after passing the confirmation gate.

Single-writer: callers must serialize mutating calls (the HTTP service
wraps each session in a lock). Snapshots are plain dicts safe to hand out.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, IO

from .dsl import API, Call, Plan, parse_plan, render_plan, inline_plan, CONTEXT_SCHEMA_VERSION
from .errors import ProvoxError, SchemaVersionMismatchError, WrongStateError
from .planner import (
    BackendConfig,
    PlanRecord,
    PlannerInput,
    PlannerRequest,
    PlannerResponse,
    generate,
)
from .proactive import Suggestion, gloss_plan, request_suggestion
from .synthesis import Synthesizer, TeachExample, TeachForm
from .world import SceneSpec, SimEvent, WorldState, exec_call, load_scene

log = logging.getLogger(__name__)

# Machine states
IDLE = "idle"
PLANNING = "planning"
AWAITING_CONFIRMATION = "awaiting_confirmation"
EXECUTING = "executing"
TEACHING = "teaching"
DONE = "done"

META = "meta-prompting"
LIVE = "live"


@dataclass(frozen=True)
class ExecutionResult:
    status: str = "pending"  # pending | completed | faulted | skipped
    events: tuple[SimEvent, ...] = ()

    @property
    def fault(self) -> SimEvent | None:
        return next((e for e in self.events if e.is_fault), None)


@dataclass(frozen=True)
class InteractionStep:
    index: int
    initiator: str  # "user" | "robot-proactive"
    plan: Plan
    inlined: Plan
    utterance: str | None = None
    confirmation: str = "not-required"  # not-required | confirmed | rejected
    execution: ExecutionResult = field(default_factory=ExecutionResult)
    t_start: float = 0.0
    t_end: float = 0.0
    kind: str = "plan"  # plan | teach
    annotation: str = ""
    world_hash: str = ""

    def executed_primitives(self) -> tuple[Call, ...]:
        completed = sum(1 for e in self.execution.events if not e.is_fault)
        return self.inlined.calls[:completed]

    def to_json_obj(self) -> dict:
        return {
            "index": self.index,
            "initiator": self.initiator,
            "utterance": self.utterance,
            "plan": render_plan(self.plan),
            "plan_inlined": render_plan(self.inlined),
            "confirmation": self.confirmation,
            "execution": {
                "status": self.execution.status,
                "events": [
                    {"kind": e.kind, "subject": e.subject, "duration": e.duration,
                     "fault_code": e.fault_code}
                    for e in self.execution.events
                ],
            },
            "t_start": self.t_start,
            "t_end": self.t_end,
            "kind": self.kind,
            "annotation": self.annotation,
            "world_hash": self.world_hash,
        }


@dataclass(frozen=True)
class PendingPlan:
    plan: Plan
    gloss: str
    origin: str  # "user" | "robot-proactive"
    utterance: str | None = None


@dataclass(frozen=True)
class SessionTiming:
    """Simulated human-time costs charged against the world clock."""

    utterance_cost: float = 8.0
    confirm_cost: float = 2.0


@dataclass(frozen=True)
class MetricsReport:
    total_time: float
    user_initiated: int
    robot_initiated: int
    robot_initiated_accepted: int
    time_breakdown: dict[str, float]

    def to_json_obj(self) -> dict:
        return {
            "total_time": self.total_time,
            "user_initiated": self.user_initiated,
            "robot_initiated": self.robot_initiated,
            "robot_initiated_accepted": self.robot_initiated_accepted,
            "time_breakdown": dict(self.time_breakdown),
        }


@dataclass(frozen=True)
class StepOutcome:
    """What a session operation produced, for callers that render output."""

    kind: str  # pending | executed | rejected | clarification | done | error | taught
    text: str = ""
    plan: Plan | None = None
    step: InteractionStep | None = None


class Session:
    """One collaboration. See module docstring for the threading contract."""

    def __init__(
        self,
        scene: SceneSpec,
        backend_config: BackendConfig | None = None,
        mode: str = META,
        proactive: bool = True,
        auto_confirm_user_plans: bool = False,
        goal: str = "",
        api: API | None = None,
        timing: SessionTiming | None = None,
        synthesizer: Synthesizer | None = None,
        backend=None,
    ):
        self.scene = scene
        self.world: WorldState = load_scene(scene)
        self.api: API = api if api is not None else API.base(scene.objects)
        self.goal = goal
        self.mode = mode
        self.proactive_enabled = proactive
        self.auto_confirm_user_plans = auto_confirm_user_plans
        self.backend_config = backend_config or BackendConfig()
        self.backend = backend  # optional injected Backend (tests)
        self.timing = timing or SessionTiming()
        self.synthesizer = synthesizer or Synthesizer()
        self.state = IDLE
        self.history: list[InteractionStep] = []
        self.pending: PendingPlan | None = None
        self.messages: list[dict] = []  # recent robot/system chat bubbles
        self._breakdown = {"instructing": 0.0, "executing": 0.0, "confirming": 0.0, "idle": 0.0}
        self._listeners: list[Callable[[str, dict], None]] = []
        self._transcript: IO[str] | None = None

    # -- plumbing -------------------------------------------------------

    def add_listener(self, fn: Callable[[str, dict], None]) -> None:
        self._listeners.append(fn)

    def _emit(self, event_type: str, payload: dict) -> None:
        for fn in list(self._listeners):
            try:
                fn(event_type, payload)
            except Exception:  # a broken observer must not corrupt the session
                log.exception("session listener failed")

    def _set_state(self, state: str) -> None:
        if state != self.state:
            self.state = state
            self._emit_snapshot()

    def _emit_snapshot(self) -> None:
        if self._listeners:
            self._emit("state_changed", self.snapshot())

    def _say(self, role: str, text: str) -> None:
        """Record a chat bubble in session state (snapshots carry it, so a
        reloading client reconstructs the same view) and push it."""
        self.messages.append({"role": role, "text": text})
        del self.messages[:-50]
        self._emit("message", {"role": role, "text": text})

    def attach_transcript(self, path: str | Path) -> None:
        self._transcript = open(path, "a", encoding="utf-8")

    def close(self) -> None:
        if self._transcript:
            self._transcript.close()
            self._transcript = None

    def _require(self, *, mode: str | None = None, states: tuple[str, ...] | None = None) -> None:
        if mode is not None and self.mode != mode:
            raise WrongStateError(f"operation requires {mode} mode (session is {self.mode})")
        if states is not None and self.state not in states:
            raise WrongStateError(f"operation invalid in state {self.state}")

    def _charge(self, bucket: str, seconds: float) -> None:
        if seconds <= 0:
            return
        self._breakdown[bucket] += seconds
        self.world = self.world.with_clock(self.world.clock + seconds)

    def _append_step(self, step: InteractionStep) -> InteractionStep:
        step = replace(step, index=len(self.history),
                       world_hash=self.world.state_hash())
        self.history.append(step)
        if self._transcript:
            self._transcript.write(json.dumps(step.to_json_obj(), ensure_ascii=False) + "\n")
            self._transcript.flush()
        return step

    def plan_records(self) -> tuple[PlanRecord, ...]:
        records = []
        for step in self.history:
            if step.kind != "plan":
                continue
            fault = step.execution.fault
            records.append(
                PlanRecord(
                    plan=step.plan,
                    utterance=step.utterance,
                    executed_primitives=step.executed_primitives(),
                    rejected=step.confirmation == "rejected",
                    fault=fault.fault_code if fault else "",
                )
            )
        return tuple(records)

    # -- live interaction ------------------------------------------------

    def handle_utterance(self, text: str) -> StepOutcome:
        """Map a user utterance to a plan and gate (or run) it."""
        self._require(mode=LIVE, states=(IDLE,))
        self._charge("instructing", self.timing.utterance_cost)
        self._set_state(PLANNING)
        request = PlannerRequest(
            goal=self.goal, api=self.api,
            input=PlannerInput.utterance(text), history=self.plan_records(),
        )
        try:
            response = generate(request, self.backend_config, backend=self.backend)
        except ProvoxError as err:
            self._say("robot", f"error: {err.message}")
            self._set_state(IDLE)
            return StepOutcome("error", text=err.message)
        if response.outcome == "clarification":
            self._say("robot", response.message)
            self._set_state(IDLE)
            return StepOutcome("clarification", text=response.message)
        if response.outcome == "done":
            self._set_state(DONE)
            return StepOutcome("done")
        plan = response.plan
        if self.auto_confirm_user_plans:
            step = self._execute(plan, initiator="user", utterance=text,
                                 confirmation="not-required")
            return StepOutcome("executed", plan=plan, step=step)
        self.pending = PendingPlan(plan=plan, gloss=gloss_plan(plan, self.api),
                                   origin="user", utterance=text)
        self._set_state(AWAITING_CONFIRMATION)
        return StepOutcome("pending", plan=plan, text=self.pending.gloss)

    def confirm(self) -> StepOutcome:
        self._require(mode=LIVE, states=(AWAITING_CONFIRMATION,))
        pending = self.pending
        self.pending = None
        self._charge("confirming", self.timing.confirm_cost)
        step = self._execute(pending.plan, initiator=pending.origin,
                             utterance=pending.utterance, confirmation="confirmed")
        return StepOutcome("executed", plan=pending.plan, step=step)

    def reject(self) -> StepOutcome:
        self._require(mode=LIVE, states=(AWAITING_CONFIRMATION,))
        pending = self.pending
        self.pending = None
        self._charge("confirming", self.timing.confirm_cost)
        t = self.world.clock
        step = self._append_step(InteractionStep(
            index=0,
            initiator=pending.origin,
            plan=pending.plan,
            inlined=inline_plan(pending.plan, self.api),
            utterance=pending.utterance,
            confirmation="rejected",
            execution=ExecutionResult(status="skipped"),
            t_start=t, t_end=t,
        ))
        self._set_state(IDLE)
        return StepOutcome("rejected", step=step)

    def _execute(self, plan: Plan, *, initiator: str, utterance: str | None,
                 confirmation: str) -> InteractionStep:
        self._set_state(EXECUTING)
        t_start = self.world.clock
        inlined = inline_plan(plan, self.api)
        world = self.world
        events: list[SimEvent] = []
        for call in inlined.calls:
            world, event = exec_call(world, call)
            events.append(event)
            self._emit("execution_event", {
                "kind": event.kind, "subject": event.subject,
                "duration": event.duration, "fault_code": event.fault_code,
            })
            if event.is_fault:
                break
        self.world = world
        self._breakdown["executing"] += sum(e.duration for e in events)
        faulted = bool(events) and events[-1].is_fault
        step = self._append_step(InteractionStep(
            index=0,
            initiator=initiator,
            plan=plan,
            inlined=inlined,
            utterance=utterance,
            confirmation=confirmation,
            execution=ExecutionResult(
                status="faulted" if faulted else "completed", events=tuple(events)),
            t_start=t_start,
            t_end=self.world.clock,
        ))
        if faulted:
            self._say("robot", f"plan stopped: {step.execution.fault.fault_code}")
            self._set_state(IDLE)
        elif self.proactive_enabled and self.mode == LIVE:
            self._propose_next()
        else:
            self._set_state(IDLE)
        return step

    def _propose_next(self) -> None:
        """Proactive cadence: exactly one suggestion request per completed
        execution."""
        self._set_state(PLANNING)
        suggestion, outcome = request_suggestion(
            self.goal, self.api, self.plan_records(), self.world.clock,
            self.backend_config, backend=self.backend,
        )
        if outcome == "done":
            self._set_state(DONE)
            return
        if suggestion is None:
            self._set_state(IDLE)
            return
        self.pending = PendingPlan(plan=suggestion.plan, gloss=suggestion.gloss,
                                   origin="robot-proactive")
        self._emit("suggestion", {"plan": render_plan(suggestion.plan),
                                  "gloss": suggestion.gloss})
        self._set_state(AWAITING_CONFIRMATION)

    def teach_live(self, example: TeachExample) -> StepOutcome:
        """Synthesize a function from a demonstration; usable immediately."""
        self._require(mode=LIVE, states=(IDLE, AWAITING_CONFIRMATION))
        previous = self.state
        self._set_state(TEACHING)
        try:
            defn = self.synthesizer.synthesize_function(example, self.api)
            self.api = self.api.register(defn)
        finally:
            self._set_state(previous)
        t = self.world.clock
        self._append_step(InteractionStep(
            index=0, initiator="user", plan=example.decomposition,
            inlined=inline_plan(example.decomposition, self.api),
            utterance=example.trigger_utterance,
            execution=ExecutionResult(status="skipped"),
            t_start=t, t_end=t, kind="teach",
            annotation=f"taught {defn.signature.name}",
        ))
        self._say("system", f"learned {defn.signature.render()}")
        self._emit_snapshot()
        return StepOutcome("taught", text=defn.signature.name)

    def advance_idle(self, seconds: float) -> None:
        """User-side time (e.g. making the sandwich) while the robot waits."""
        self._require(mode=LIVE, states=(IDLE, AWAITING_CONFIRMATION))
        self._charge("idle", seconds)

    def end(self) -> None:
        self._require(states=(IDLE,))
        self._set_state(DONE)

    # -- meta-prompting mode ----------------------------------------------

    def meta_set_goal(self, goal: str) -> None:
        self._require(mode=META)
        self.goal = goal
        self._emit_snapshot()

    def meta_teach(self, form: TeachForm) -> StepOutcome:
        self._require(mode=META)
        defn = self.synthesizer.synthesize_from_form(form, self.api)
        self.api = self.api.register(defn)
        self._emit_snapshot()
        return StepOutcome("taught", text=defn.signature.name)

    def meta_edit(self, name: str, form: TeachForm) -> StepOutcome:
        self._require(mode=META)
        defn = self.synthesizer.synthesize_from_form(form, self.api)
        self.api = self.api.update(name, defn)
        self._emit_snapshot()
        return StepOutcome("taught", text=name)

    def meta_delete(self, name: str) -> None:
        self._require(mode=META)
        self.api = self.api.remove(name)
        self._emit_snapshot()

    def meta_test_utterance(self, text: str) -> PlannerResponse:
        """Planner preview with empty history; never executes anything."""
        self._require(mode=META)
        request = PlannerRequest(
            goal=self.goal, api=self.api,
            input=PlannerInput.utterance(text), history=(),
        )
        return generate(request, self.backend_config, backend=self.backend)

    def to_live(self) -> None:
        """One-way transition out of meta-prompting."""
        self._require(mode=META)
        self.mode = LIVE
        self.state = IDLE
        if self._listeners:
            self._emit("state_changed", self.snapshot())

    # -- context files -----------------------------------------------------

    def export_context(self) -> dict:
        doc = self.api.to_json_obj()
        return {"version": doc["version"], "goal": self.goal, "functions": doc["functions"]}

    def export_context_text(self) -> str:
        return json.dumps(self.export_context(), indent=2, ensure_ascii=False) + "\n"

    def import_context(self, obj: dict) -> None:
        if obj.get("version") != CONTEXT_SCHEMA_VERSION:
            raise SchemaVersionMismatchError(obj.get("version"))
        api = API.from_json_obj(
            {"version": obj["version"], "functions": obj.get("functions", [])},
            self.scene.objects,
        )
        self.goal = obj.get("goal", "")
        self.api = api

    # -- metrics ------------------------------------------------------------

    def compute_metrics(self) -> MetricsReport:
        user = robot = accepted = 0
        for step in self.history:
            if step.kind != "plan":
                continue
            if step.initiator == "user":
                user += 1
            else:
                robot += 1
                if step.confirmation == "confirmed":
                    accepted += 1
        breakdown = dict(self._breakdown)
        return MetricsReport(
            total_time=sum(breakdown.values()),
            user_initiated=user,
            robot_initiated=robot,
            robot_initiated_accepted=accepted,
            time_breakdown=breakdown,
        )

    # -- snapshots ------------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "mode": self.mode,
            "state": self.state,
            "goal": self.goal,
            "proactive": self.proactive_enabled,
            "objects": [
                {
                    "id": o.id,
                    "display_name": o.display_name,
                    "container": o.is_container,
                    "position": list(o.position),
                }
                for o in self.scene.objects
            ],
            "api": {
                "functions": [
                    {
                        "name": d.signature.name,
                        "signature": d.signature.render(),
                        "doc": d.signature.doc,
                        "params": [p.name for p in d.signature.params],
                        "base": d.is_primitive,
                        "body": [s.render() for s in d.body.steps] if d.body else None,
                    }
                    for d in self.api.listing()
                ]
            },
            "world": {
                "clock": self.world.clock,
                "poses": {k: list(v) for k, v in self.world.poses.items()},
                "inside": dict(self.world.inside),
                "gripper": {
                    "position": list(self.world.gripper.position),
                    "open": self.world.gripper.open,
                    "holding": self.world.gripper.holding,
                },
            },
            "pending": (
                {
                    "origin": self.pending.origin,
                    "plan": render_plan(self.pending.plan),
                    "gloss": self.pending.gloss,
                }
                if self.pending
                else None
            ),
            "messages": list(self.messages),
            "history": [s.to_json_obj() for s in self.history],
            "metrics": self.compute_metrics().to_json_obj(),
        }


# ---------------------------------------------------------------------------
# Transcript replay
# ---------------------------------------------------------------------------

def replay_transcript(lines: list[str], scene: SceneSpec) -> tuple[bool, str]:
    """Re-execute a logged session and verify each step's world hash.

    Only the executed inlined primitives matter; costs and clock are not
    part of the hash.
    """
    base = API.base(scene.objects)
    world = load_scene(scene)
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        step = json.loads(line)
        status = step.get("execution", {}).get("status")
        if status in ("completed", "faulted"):
            plan = parse_plan(step["plan_inlined"], base)
            for call in plan.calls:
                world, event = exec_call(world, call)
                if event.is_fault:
                    break
        got = world.state_hash()
        expected = step.get("world_hash", "")
        if expected and got != expected:
            return False, f"hash mismatch at line {lineno}: {got} != {expected}"
    return True, world.state_hash()

"""Planner boundary: conditioning context, tool schema, backend dispatch.

A :class:`PlannerRequest` bundles everything the planner is conditioned
on: the goal text, the function registry, the interaction history, and the
input (a user utterance or the proactive trigger). Backends return raw
proposals; :func:`validate_and_retry` guarantees that any plan handed back
to callers validates against the request's registry.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .dsl import API, Call, Plan, render_plan, validate_plan
from .errors import (
    InvalidPlanAfterRetriesError,
    MalformedToolCallError,
    ProvoxError,
)

PLAN_LENGTH_CAP = 12
HISTORY_WINDOW = 20

API_KEY_ENV = "PROVOX_API_KEY"

PREAMBLE = (
    "You are a robot arm collaborating with a person at a shared tabletop "
    "workspace. You act by emitting programs over the API below, one function "
    "call per motion, in execution order. Use the submit_plan tool to return a "
    "plan. If the goal is already complete, reply with the single word DONE. "
    "If you need more information from the person, reply with a short question "
    "in plain text."
)


@dataclass(frozen=True)
class PlannerInput:
    kind: str  # "utterance" | "proactive"
    text: str

    @classmethod
    def utterance(cls, text: str) -> "PlannerInput":
        return cls("utterance", text)

    @classmethod
    def proactive(cls, trigger: str) -> "PlannerInput":
        return cls("proactive", trigger)


@dataclass(frozen=True)
class PlanRecord:
    """Planner-facing view of one history step."""

    plan: Plan
    utterance: str | None = None
    executed_primitives: tuple[Call, ...] = ()
    rejected: bool = False
    fault: str = ""

    @property
    def proactive(self) -> bool:
        return self.utterance is None

    @property
    def executed(self) -> bool:
        return bool(self.executed_primitives)


@dataclass(frozen=True)
class PlannerRequest:
    goal: str
    api: API
    input: PlannerInput
    history: tuple[PlanRecord, ...] = ()


@dataclass(frozen=True)
class PlannerResponse:
    outcome: str  # "plan" | "clarification" | "done"
    plan: Plan | None = None
    message: str = ""
    retries: int = 0

    @classmethod
    def of_plan(cls, plan: Plan, retries: int = 0) -> "PlannerResponse":
        return cls("plan", plan=plan, retries=retries)

    @classmethod
    def clarification(cls, message: str, retries: int = 0) -> "PlannerResponse":
        return cls("clarification", message=message, retries=retries)

    @classmethod
    def done(cls, retries: int = 0) -> "PlannerResponse":
        return cls("done", retries=retries)


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"  # "mock" | "remote"
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    max_retries: int = 2
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind == "remote" and not (self.endpoint and self.model):
            raise ValueError("remote backend requires endpoint and model")

    def credential(self) -> str:
        return os.environ.get(API_KEY_ENV, "")


def load_backend_config(path: str | Path | None = None, **overrides) -> BackendConfig:
    """Config file (TOML or JSON) merged with explicit overrides."""
    values: dict = {}
    if path is not None:
        p = Path(path)
        raw = p.read_bytes()
        if p.suffix == ".toml":
            try:
                import tomllib
            except ImportError:  # Python 3.10
                import tomli as tomllib
            values = tomllib.loads(raw.decode("utf-8"))
        else:
            values = json.loads(raw.decode("utf-8"))
        values = values.get("backend", values)
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {"kind", "endpoint", "model", "temperature", "max_retries", "timeout"}
    return BackendConfig(**{k: v for k, v in values.items() if k in known})


# ---------------------------------------------------------------------------
# Prompt assembly
# ---------------------------------------------------------------------------

def _render_api_listing(api: API) -> str:
    lines = []
    ids = list(api.objects)
    lines.append(f"OBJECTS = [{', '.join(ids)}]")
    lines.append("")
    lines.append("class Robot:")
    for defn in api.listing():
        sig = defn.signature
        args = "".join(f", {p.name}: ObjectRef" for p in sig.params)
        lines.append(f"    def {sig.name}(self{args}) -> None:")
        lines.append(f'        """{sig.doc}"""')
        lines.append("")
    return "\n".join(lines)


def delivered_objects(records, api: API) -> list[str]:
    """Objects delivered into any container across the executed history."""
    container_ids = {o.id for o in api.objects.values() if o.is_container}
    delivered: list[str] = []
    held: str | None = None
    over: str | None = None
    for rec in records:
        for call in rec.executed_primitives:
            if call.function == "pickup":
                held = call.args[0]
                over = None
            elif call.function == "goto":
                over = call.args[0]
            elif call.function == "release":
                if held is not None and over in container_ids and held not in delivered:
                    delivered.append(held)
                held = None
    return delivered


def _render_history(records: tuple[PlanRecord, ...], api: API) -> str:
    if not records:
        return "(none)"
    lines = []
    if len(records) > HISTORY_WINDOW:
        older = records[:-HISTORY_WINDOW]
        recent = records[-HISTORY_WINDOW:]
        delivered = delivered_objects(older, api)
        summary = ", ".join(delivered) if delivered else "nothing"
        lines.append(f"[{len(older)} earlier steps; delivered so far: {summary}]")
    else:
        recent = records
    for rec in recent:
        suffix = ""
        if rec.rejected:
            suffix = " (rejected)"
        elif rec.fault:
            suffix = f" (fault: {rec.fault})"
        if rec.utterance is not None:
            lines.append(f"User: {rec.utterance}")
            lines.append(f"Robot: {render_plan(rec.plan)}{suffix}")
        else:
            lines.append(f"Robot (suggested): {render_plan(rec.plan)}{suffix}")
    return "\n".join(lines)


def assemble_prompt(request: PlannerRequest) -> str:
    """Deterministic, byte-stable conditioning text for chat backends."""
    return (
        f"{PREAMBLE}\n"
        f"\n"
        f"Goal: {request.goal}\n"
        f"\n"
        f"API:\n"
        f"```python\n"
        f"{_render_api_listing(request.api)}\n"
        f"```\n"
        f"\n"
        f"History:\n"
        f"{_render_history(request.history, request.api)}\n"
        f"\n"
        f"Input: {request.input.text}\n"
    )


# ---------------------------------------------------------------------------
# Tool schema
# ---------------------------------------------------------------------------

def derive_tool_schema(api: API) -> list[dict]:
    """One tool per registry function plus a synthetic multi-call tool.

    Every ObjectRef parameter is an enumerated string over the scene's
    object ids, so a conforming response can only name real objects.
    """
    object_ids = list(api.objects)
    tools = []
    for defn in api.listing():
        sig = defn.signature
        properties = {
            p.name: {
                "type": "string",
                "enum": object_ids,
                "description": p.description or "target object",
            }
            for p in sig.params
        }
        tools.append(
            {
                "type": "function",
                "function": {
                    "name": sig.name,
                    "description": sig.doc,
                    "parameters": {
                        "type": "object",
                        "properties": properties,
                        "required": [p.name for p in sig.params],
                    },
                },
            }
        )
    function_names = [d.signature.name for d in api.listing()]
    tools.append(
        {
            "type": "function",
            "function": {
                "name": "submit_plan",
                "description": "Submit a plan of several calls, in execution order.",
                "parameters": {
                    "type": "object",
                    "properties": {
                        "calls": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "properties": {
                                    "function": {"type": "string", "enum": function_names},
                                    "args": {
                                        "type": "array",
                                        "items": {"type": "string", "enum": object_ids},
                                    },
                                },
                                "required": ["function", "args"],
                            },
                        }
                    },
                    "required": ["calls"],
                },
            },
        }
    )
    return tools


# ---------------------------------------------------------------------------
# Backends and validated generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RawProposal:
    """Undecoded backend output."""

    kind: str  # "calls" | "text" | "done"
    calls: tuple[tuple[str, tuple[str, ...]], ...] = ()
    text: str = ""


class Backend(Protocol):
    def propose(self, request: PlannerRequest, corrective: str | None) -> RawProposal:
        ...


@dataclass
class ScriptedBackend:
    """Replays a fixed sequence of proposals; for tests and demos."""

    proposals: list[RawProposal]
    _cursor: int = 0

    def propose(self, request: PlannerRequest, corrective: str | None) -> RawProposal:
        if self._cursor >= len(self.proposals):
            return self.proposals[-1]
        raw = self.proposals[self._cursor]
        self._cursor += 1
        return raw


def decode_proposal(raw: RawProposal, api: API, retries: int = 0) -> PlannerResponse:
    if raw.kind == "done":
        return PlannerResponse.done(retries=retries)
    if raw.kind == "text":
        return PlannerResponse.clarification(raw.text, retries=retries)
    calls = tuple(Call(name, tuple(args)) for name, args in raw.calls)
    if len(calls) > PLAN_LENGTH_CAP:
        raise MalformedToolCallError(f"plan exceeds {PLAN_LENGTH_CAP} calls")
    plan = validate_plan(Plan(calls), api)
    return PlannerResponse.of_plan(plan, retries=retries)


def validate_and_retry(backend: Backend, request: PlannerRequest,
                       config: BackendConfig) -> PlannerResponse:
    """Decode with validation; on failure re-ask with the error appended as
    corrective context, up to ``config.max_retries`` extra attempts."""
    corrective = None
    last_error: ProvoxError | None = None
    attempts = config.max_retries + 1
    for attempt in range(attempts):
        raw = backend.propose(request, corrective)
        try:
            return decode_proposal(raw, request.api, retries=attempt)
        except ProvoxError as err:
            last_error = err
            corrective = (
                f"The previous response was invalid: {err.message}. "
                f"Respond again with a valid plan."
            )
    raise InvalidPlanAfterRetriesError(last_error, attempts)


def make_backend(config: BackendConfig) -> Backend:
    if config.kind == "mock":
        from .mock_planner import MockBackend

        return MockBackend()
    if config.kind == "remote":
        from .remote_client import RemoteBackend

        return RemoteBackend(config)
    raise ValueError(f"unknown backend kind {config.kind!r}")


def generate(request: PlannerRequest, config: BackendConfig,
             backend: Backend | None = None) -> PlannerResponse:
    """Produce a validated planner response via the configured backend."""
    if backend is None:
        backend = make_backend(config)
    return validate_and_retry(backend, request, config)

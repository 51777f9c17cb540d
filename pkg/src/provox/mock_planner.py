"""Deterministic goal-directed planner standing in for a remote LM.

The mock reads the goal and utterances with plain alias matching, keeps
track of which goal items the executed history already delivered, and
proposes the next delivery. It is a pure function of the request, which is
what makes rollouts, session tests, and the evaluation harness
reproducible offline.

Initiative rules (how much the mock volunteers without being asked):

* goal items + a taught delivery behavior: proposes deliveries until the
  goal is exhausted;
* goal items but only base primitives: volunteers at most two deliveries,
  then defers to the user;
* no goal items but taught behaviors: risks a single opening guess at the
  first undelivered object;
* neither: stays quiet.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import text
from .dsl import API, Call, FunctionDef, Plan, inline_plan
from .planner import PlannerRequest, RawProposal, delivered_objects

CLARIFICATION = "Which object do you mean?"

# How many deliveries the mock will volunteer proactively when the user has
# not taught it any behaviors (see module docstring).
PRIMITIVE_INITIATIVE_BUDGET = 2

_PRIMITIVE_VERBS = {
    "put": "put",
    "pick": "pick",
    "pickup": "pick",
    "go": "go",
    "goto": "go",
    "open": "open",
    "close": "close",
    "release": "release",
}


@dataclass
class MockBackend:
    def propose(self, request: PlannerRequest, corrective: str | None) -> RawProposal:
        if request.input.kind == "proactive":
            return _propose_next(request)
        return _plan_utterance(request)


def _objects(api: API):
    return list(api.objects.values())


def _goal_targets(request: PlannerRequest) -> list[str]:
    movable = [o for o in _objects(request.api) if not o.is_container]
    return text.align_ordered(request.goal, movable)


def _goal_container(request: PlannerRequest) -> str | None:
    containers = [o for o in _objects(request.api) if o.is_container]
    mentioned = text.align_ordered(request.goal, containers)
    if mentioned:
        return mentioned[0]
    if len(containers) == 1:
        return containers[0].id
    return None


def _delivery_set(call: Call, api: API) -> list[str]:
    """What a single call would deliver into containers, by trace walk."""
    return delivered_objects(
        [_FakeRecord(tuple(inline_plan(Plan((call,)), api).calls))], api
    )


@dataclass(frozen=True)
class _FakeRecord:
    executed_primitives: tuple[Call, ...]


def _taught_delivery_call(item: str, allowed: set[str], api: API) -> tuple[int, int, Call] | None:
    """Cheapest taught call that delivers ``item`` without touching objects
    outside ``allowed``; returns (inlined length, registration index, call)."""
    best = None
    for index, defn in enumerate(api.taught()):
        arity = defn.signature.arity
        if arity > 1:
            continue
        call = Call(defn.signature.name, (item,) if arity == 1 else ())
        delivered = _delivery_set(call, api)
        if item not in delivered or not set(delivered) <= allowed:
            continue
        cost = (len(inline_plan(Plan((call,)), api)), index, call)
        if best is None or cost[:2] < best[:2]:
            best = cost
    return best


def _proactive_executions(request: PlannerRequest) -> int:
    return sum(1 for r in request.history if r.proactive and r.executed)


def _propose_next(request: PlannerRequest) -> RawProposal:
    api = request.api
    targets = _goal_targets(request)
    delivered = set(delivered_objects(request.history, api))
    remaining = [t for t in targets if t not in delivered]

    if not targets:
        # No goal items to work from. With taught behaviors and a fresh
        # session the planner risks one opening guess; otherwise it defers.
        if request.history or not api.taught():
            return RawProposal("done")
        for obj in _objects(api):
            if obj.is_container or obj.id in delivered:
                continue
            found = _taught_delivery_call(obj.id, {obj.id}, api)
            if found:
                call = found[2]
                return RawProposal("calls", ((call.function, call.args),))
            break
        return RawProposal("done")

    if not remaining:
        return RawProposal("done")

    item = remaining[0]
    found = _taught_delivery_call(item, set(remaining), api)
    if found:
        call = found[2]
        return RawProposal("calls", ((call.function, call.args),))

    container = _goal_container(request)
    if container is None or _proactive_executions(request) >= PRIMITIVE_INITIATIVE_BUDGET:
        return RawProposal("done")
    return RawProposal(
        "calls",
        (("pickup", (item,)), ("goto", (container,)), ("release", ())),
    )


def _match_taught(request: PlannerRequest, aligned: list[str]) -> RawProposal | None:
    """Taught-function trigger match: utterance token equals the function
    name, or overlaps a contentful word of its doc."""
    norm = text.normalize(request.input.text)
    utter_tokens = text.tokens(request.input.text)
    best: tuple[int, int, FunctionDef] | None = None  # (-score, index, defn)
    for index, defn in enumerate(request.api.taught()):
        name = defn.signature.name
        name_phrase = name.replace("_", " ")
        score = 0
        if text.find_word_phrase(norm, name_phrase) >= 0 or any(
            len(name) >= 3 and t.startswith(name) for t in utter_tokens
        ):
            score = 2
        else:
            doc_words = [w for w in text.tokens(defn.signature.doc) if w not in text.STOPWORDS]
            if any(_stem_match(t, w) for t in utter_tokens for w in doc_words):
                score = 1
        if score == 0:
            continue
        if best is None or (-score, index) < best[:2]:
            best = (-score, index, defn)
    if best is None:
        return None
    defn = best[2]
    arity = defn.signature.arity
    constants = defn.body.constant_ids() if defn.body else set()
    candidates = [a for a in aligned if a not in constants] or aligned
    if len(candidates) < arity:
        return None
    args = tuple(candidates[:arity])
    return RawProposal("calls", ((defn.signature.name, args),))


def _stem_match(a: str, b: str) -> bool:
    if a == b:
        return True
    shorter, longer = sorted((a, b), key=len)
    return len(shorter) >= 4 and longer.startswith(shorter)


def _plan_utterance(request: PlannerRequest) -> RawProposal:
    api = request.api
    objs = _objects(api)
    aligned = text.align_ordered(request.input.text, objs)

    taught = _match_taught(request, aligned)
    if taught is not None:
        return taught

    verb = None
    toks = text.tokens(request.input.text)
    lead = text.lead_verb(request.input.text)
    if lead in _PRIMITIVE_VERBS:
        verb = _PRIMITIVE_VERBS[lead]
    else:
        for t in toks:
            if t in _PRIMITIVE_VERBS:
                verb = _PRIMITIVE_VERBS[t]
                break

    container_ids = {o.id for o in objs if o.is_container}
    movable = [a for a in aligned if a not in container_ids]

    if verb == "open":
        return RawProposal("calls", (("open_gripper", ()),))
    if verb == "close":
        return RawProposal("calls", (("close_gripper", ()),))
    if verb == "release":
        return RawProposal("calls", (("release", ()),))
    if verb == "go" and aligned:
        return RawProposal("calls", (("goto", (aligned[0],)),))
    if verb == "pick" and movable:
        return RawProposal("calls", (("pickup", (movable[0],)),))
    if verb == "put" and movable:
        aligned_containers = [a for a in aligned if a in container_ids]
        container = aligned_containers[0] if aligned_containers else _goal_container(request)
        if container is not None:
            return RawProposal(
                "calls",
                (("pickup", (movable[0],)), ("goto", (container,)), ("release", ())),
            )
    return RawProposal("text", text=CLARIFICATION)

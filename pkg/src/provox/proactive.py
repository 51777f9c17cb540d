"""Robot-initiated suggestions: trigger construction and plan glossing.

After every executed plan the engine re-invokes the planner with a fixed
trigger string built from the session goal. A resulting plan is wrapped in
a :class:`Suggestion` together with a deterministic natural-language gloss
and held for user confirmation; it is never executed on its own.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .dsl import API, Plan
from .errors import EmptyGoalError, ProvoxError
from .planner import BackendConfig, PlannerInput, PlannerRequest, generate

log = logging.getLogger(__name__)

TRIGGER_PREFIX = "Propose an action to perform next to perform "


@dataclass(frozen=True)
class Suggestion:
    plan: Plan
    gloss: str
    created_at: float
    origin: str = "robot-proactive"


def build_trigger(goal: str) -> str:
    """The proactive prompt: the fixed template with the goal spliced in
    verbatim. A single terminal period (goals already ending in '.' are not
    doubled)."""
    if not goal or not goal.strip():
        raise EmptyGoalError()
    body = goal[:-1] if goal.endswith(".") else goal
    return f"{TRIGGER_PREFIX}{body}."


def gloss_plan(plan: Plan, api: API) -> str:
    """Deterministic confirmation text, e.g. 'Should I pack the Skittles
    next?'. Call verb-phrases are joined by ' and '."""
    phrases = []
    for call in plan.calls:
        verb = call.function.replace("_", " ")
        names = [api.objects[a].display_name if a in api.objects else a for a in call.args]
        if names:
            phrases.append(f"{verb} " + " and ".join(f"the {n}" for n in names))
        else:
            phrases.append(verb)
    return f"Should I {' and '.join(phrases)} next?"


def request_suggestion(goal: str, api: API, history, world_clock: float,
                       config: BackendConfig, backend=None) -> tuple[Suggestion | None, str]:
    """Ask the planner what to do next.

    Returns (suggestion, outcome) where outcome is the raw planner outcome
    ("plan" | "clarification" | "done" | "error"); the suggestion is None
    unless outcome is "plan". Backend failures degrade to ("error", None)
    with a warning logged: a broken proactive loop must never block the
    user from instructing directly.
    """
    request = PlannerRequest(
        goal=goal,
        api=api,
        input=PlannerInput.proactive(build_trigger(goal)),
        history=tuple(history),
    )
    try:
        response = generate(request, config, backend=backend)
    except ProvoxError as err:
        log.warning("proactive suggestion failed: %s", err.message)
        return None, "error"
    if response.outcome != "plan":
        return None, response.outcome
    suggestion = Suggestion(plan=response.plan, gloss=gloss_plan(response.plan, api),
                            created_at=world_clock)
    return suggestion, "plan"


def suggest_next(goal: str, api: API, history, world_clock: float,
                 config: BackendConfig, backend=None) -> Suggestion | None:
    """Plan outcome wrapped as a Suggestion; anything else is None."""
    suggestion, _ = request_suggestion(goal, api, history, world_clock, config, backend)
    return suggestion

"""Meta-prompt efficacy evaluation: ablation conditions and overlap scoring.

A user context (goal + taught functions) is evaluated by running the
proactive planner in a loop with every suggestion auto-accepted, then
counting how many of the executed primitive calls also occur in a
ground-truth reference plan. Four conditions ablate the context: the full
context, the neutral goal with the user's functions, the user's goal with
the base registry, and neither.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field

from .dsl import API, Call, Plan, inline_plan, is_primitive_plan, render_plan
from .planner import BackendConfig, PlanRecord, PlannerInput, PlannerRequest, generate
from .proactive import build_trigger
from .world import SceneSpec, WorldState, exec_call, load_scene

NEUTRAL_GOAL = "to help the user with a tabletop task"

CONDITIONS = ("full", "fixed-goal", "fixed-api", "fixed-context")


@dataclass(frozen=True)
class UserContext:
    """A meta-prompted context: personalized goal plus taught functions."""

    goal: str
    api: API
    name: str = "context"


@dataclass(frozen=True)
class ReferencePlan:
    """Ground-truth primitive plan demonstrated in the task video."""

    plan: Plan

    def __post_init__(self):
        if not self.plan.calls:
            raise ValueError("reference plan must be non-empty")
        if not is_primitive_plan(self.plan):
            raise ValueError("reference plan must be primitive-only")

    def __len__(self) -> int:
        return len(self.plan)


@dataclass(frozen=True)
class EfficacyResult:
    condition: str
    helpful_actions: int
    lcs_actions: int
    rollout: Plan
    steps_taken: int
    stop_reason: str

    def to_json_obj(self) -> dict:
        return {
            "condition": self.condition,
            "helpful_actions": self.helpful_actions,
            "lcs_actions": self.lcs_actions,
            "rollout": render_plan(self.rollout),
            "steps_taken": self.steps_taken,
            "stop_reason": self.stop_reason,
        }


def make_condition_context(context: UserContext, condition: str, scene: SceneSpec) -> UserContext:
    """Ablate goal and/or registry per the named condition."""
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    base = API.base(scene.objects)
    if condition == "full":
        return context
    if condition == "fixed-goal":
        return UserContext(goal=NEUTRAL_GOAL, api=context.api, name=context.name)
    if condition == "fixed-api":
        return UserContext(goal=context.goal, api=base, name=context.name)
    return UserContext(goal=NEUTRAL_GOAL, api=base, name=context.name)


def run_proactive_rollout(
    context: UserContext,
    scene: SceneSpec,
    config: BackendConfig,
    step_cap: int,
    backend=None,
) -> tuple[Plan, int, str]:
    """Suggest → auto-accept → execute until done, fault, silence, or cap.

    Returns the concatenated inlined primitive calls actually executed, the
    number of suggestion rounds taken, and the stop reason.
    """
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    api = context.api
    world: WorldState = load_scene(scene)
    history: list[PlanRecord] = []
    executed: list[Call] = []
    stop = "cap"
    rounds = 0
    for _ in range(step_cap):
        request = PlannerRequest(
            goal=context.goal,
            api=api,
            input=PlannerInput.proactive(build_trigger(context.goal or NEUTRAL_GOAL)),
            history=tuple(history),
        )
        response = generate(request, config, backend=backend)
        if response.outcome == "done":
            stop = "done"
            break
        if response.outcome != "plan":
            stop = "none"
            break
        rounds += 1
        inlined = inline_plan(response.plan, api)
        step_calls: list[Call] = []
        faulted = False
        for call in inlined.calls:
            world, event = exec_call(world, call)
            if event.is_fault:
                faulted = True
                break
            step_calls.append(call)
        executed.extend(step_calls)
        history.append(PlanRecord(
            plan=response.plan,
            utterance=None,
            executed_primitives=tuple(step_calls),
        ))
        if faulted:
            stop = "fault"
            break
    return Plan(tuple(executed)), rounds, stop


def efficacy_overlap(trace: Plan, reference: ReferencePlan) -> int:
    """Multiset intersection size over grounded calls (name + exact args)."""
    counts: dict[Call, int] = {}
    for call in reference.plan.calls:
        counts[call] = counts.get(call, 0) + 1
    overlap = 0
    for call in trace.calls:
        if counts.get(call, 0) > 0:
            counts[call] -= 1
            overlap += 1
    return overlap


def efficacy_lcs(trace: Plan, reference: ReferencePlan) -> int:
    """Order-sensitive variant: longest common subsequence of grounded calls."""
    a, b = trace.calls, reference.plan.calls
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def default_step_cap(reference: ReferencePlan) -> int:
    return len(reference) + 2


def evaluate_condition(
    context: UserContext,
    condition: str,
    reference: ReferencePlan,
    scene: SceneSpec,
    config: BackendConfig,
    step_cap: int | None = None,
    backend=None,
) -> EfficacyResult:
    cap = step_cap if step_cap is not None else default_step_cap(reference)
    ablated = make_condition_context(context, condition, scene)
    trace, rounds, stop = run_proactive_rollout(ablated, scene, config, cap, backend=backend)
    return EfficacyResult(
        condition=condition,
        helpful_actions=efficacy_overlap(trace, reference),
        lcs_actions=efficacy_lcs(trace, reference),
        rollout=trace,
        steps_taken=rounds,
        stop_reason=stop,
    )


@dataclass
class StudyReport:
    conditions: dict[str, dict] = field(default_factory=dict)
    results: list[EfficacyResult] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "conditions": self.conditions,
            "results": [r.to_json_obj() for r in self.results],
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, ensure_ascii=False) + "\n"

    def table(self) -> str:
        lines = [f"{'condition':<16} {'n':>3} {'helpful':>10} {'lcs':>10}"]
        for cond in CONDITIONS:
            if cond not in self.conditions:
                continue
            stats = self.conditions[cond]
            lines.append(
                f"{cond:<16} {stats['n']:>3} "
                f"{stats['helpful_mean']:>6.2f}±{stats['helpful_se']:<4.2f} "
                f"{stats['lcs_mean']:>6.2f}±{stats['lcs_se']:<4.2f}"
            )
        return "\n".join(lines)


def _mean_se(values: list[int]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = statistics.fmean(values)
    se = statistics.stdev(values) / len(values) ** 0.5 if len(values) > 1 else 0.0
    return mean, se


def run_study(
    contexts: list[UserContext],
    reference: ReferencePlan,
    scene: SceneSpec,
    config: BackendConfig,
    conditions: tuple[str, ...] = CONDITIONS,
    step_cap: int | None = None,
    backend=None,
) -> StudyReport:
    """Per-condition mean ± standard error of helpful actions across contexts."""
    cap = step_cap if step_cap is not None else default_step_cap(reference)
    report = StudyReport(metadata={
        "auto_accept": True,
        "step_cap": cap,
        "reference_length": len(reference),
        "overlap": "order-insensitive multiset intersection; LCS reported alongside",
    })
    by_condition: dict[str, list[EfficacyResult]] = {c: [] for c in conditions}
    for context in contexts:
        for condition in conditions:
            result = evaluate_condition(
                context, condition, reference, scene, config, cap, backend=backend)
            report.results.append(result)
            by_condition[condition].append(result)
    for condition, results in by_condition.items():
        helpful = [r.helpful_actions for r in results]
        lcs = [r.lcs_actions for r in results]
        h_mean, h_se = _mean_se(helpful)
        l_mean, l_se = _mean_se(lcs)
        report.conditions[condition] = {
            "n": len(results),
            "helpful_mean": h_mean,
            "helpful_se": h_se,
            "lcs_mean": l_mean,
            "lcs_se": l_se,
            "helpful_values": helpful,
        }
    return report


def load_user_context(obj: dict, scene: SceneSpec, name: str = "context") -> UserContext:
    """Context file (same schema the session exports) → UserContext."""
    api = API.from_json_obj(
        {"version": obj.get("version"), "functions": obj.get("functions", [])},
        scene.objects,
    )
    return UserContext(goal=obj.get("goal", ""), api=api, name=name)

"""Function synthesis from demonstrations and from structured teach forms.

Live teaching turns a (trigger utterance, grounded decomposition) pair into
a new registry entry: constants mentioned in the utterance are lifted to
parameters by unification (every occurrence of a lifted id binds to the
same parameter), and a name/doc provider supplies the surface text. The
meta-prompting teach form skips inference entirely; the user declares the
signature and body directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Protocol

from . import text
from .dsl import (
    API,
    BodyTemplate,
    FunctionDef,
    ParamSpec,
    Plan,
    SkillSignature,
    TemplateStep,
)
from .errors import NameCollisionError, NamingFailedError

LIFT_POLICIES = ("manipulated", "all-aligned", "all")


@dataclass(frozen=True)
class TeachExample:
    """A trigger utterance plus the grounded plan that demonstrates it."""

    trigger_utterance: str
    decomposition: Plan

    def __post_init__(self):
        if not self.decomposition.calls:
            raise ValueError("decomposition must be non-empty")


@dataclass(frozen=True)
class LiftingCandidate:
    """A choice of constants to abstract, with unified parameter names."""

    lifted_ids: tuple[str, ...]
    param_names: tuple[str, ...]

    def binding(self) -> dict[str, str]:
        return dict(zip(self.param_names, self.lifted_ids))


@dataclass(frozen=True)
class TeachForm:
    """The meta-prompting teach form: explicit name, doc, params, steps.

    Step args are object ids or ``$param`` references to declared params.
    """

    name: str
    behavior_description: str
    params: tuple[str, ...] = ()
    steps: tuple[TemplateStep, ...] = ()

    def __post_init__(self):
        if not self.steps:
            raise ValueError("teach form needs at least one step")


def _distinct_arg_ids(plan: Plan) -> list[str]:
    """Distinct ObjectRef ids in first-occurrence order."""
    seen: dict[str, None] = {}
    for call in plan.calls:
        for a in call.args:
            seen.setdefault(a)
    return list(seen)


def _param_names_for(ids_in_order: list[str], lifted: tuple[str, ...]) -> tuple[str, ...]:
    names = []
    n = 0
    for oid in ids_in_order:
        if oid in lifted:
            n += 1
            names.append("obj" if n == 1 else f"obj{n}")
    return tuple(names)


def enumerate_liftings(example: TeachExample) -> list[LiftingCandidate]:
    """All 2^k subsets of the k distinct argument ids, largest first, ties
    broken by first-occurrence order of the lifted ids."""
    ids = _distinct_arg_ids(example.decomposition)
    candidates = []
    for size in range(len(ids), -1, -1):
        for combo in itertools.combinations(ids, size):
            candidates.append(
                LiftingCandidate(lifted_ids=combo, param_names=_param_names_for(ids, combo))
            )
    return candidates


def build_template(plan: Plan, candidate: LiftingCandidate) -> BodyTemplate:
    """Substitute every occurrence of each lifted id with its parameter."""
    to_param = {oid: f"${p}" for p, oid in zip(candidate.param_names, candidate.lifted_ids)}
    steps = tuple(
        TemplateStep(c.function, tuple(to_param.get(a, a) for a in c.args))
        for c in plan.calls
    )
    return BodyTemplate(steps)


def select_lifting(example: TeachExample, api: API, policy: str = "manipulated") -> LiftingCandidate:
    """Pick which constants become parameters.

    ``manipulated`` (default) lifts the ids mentioned in the utterance that
    are picked up in the decomposition; destinations referenced only by
    ``goto`` stay constant. ``all-aligned`` lifts every mentioned id,
    ``all`` every id.
    """
    if policy not in LIFT_POLICIES:
        raise ValueError(f"unknown lift policy {policy!r}")
    ids = _distinct_arg_ids(example.decomposition)
    if policy == "all":
        chosen = set(ids)
    else:
        aligned = text.align_utterance(
            example.trigger_utterance, [api.objects[i] for i in ids if i in api.objects]
        )
        if policy == "all-aligned":
            chosen = aligned
        else:
            picked_up = {
                c.args[0] for c in example.decomposition.calls
                if c.function == "pickup" and c.args
            }
            chosen = aligned & picked_up
    lifted = tuple(i for i in ids if i in chosen)
    return LiftingCandidate(lifted_ids=lifted, param_names=_param_names_for(ids, lifted))


class NameDocProvider(Protocol):
    def name_and_doc(self, example: TeachExample, lifted_ids: tuple[str, ...], api: API) -> tuple[str, str]:
        """Return (function name, documentation string)."""
        ...


@dataclass
class MockNameDocProvider:
    """Deterministic naming: the utterance's lead verb becomes the name and
    lifted object mentions in the utterance become 'a specified object'."""

    def name_and_doc(self, example, lifted_ids, api):
        name = text.lead_verb(example.trigger_utterance)
        name = "".join(ch for ch in name if ch.isalnum() or ch == "_")
        if not name or not name[0].isalpha():
            raise NamingFailedError(f"no usable verb in {example.trigger_utterance!r}")
        doc = text.replace_mentions(
            example.trigger_utterance,
            [api.objects[i] for i in lifted_ids if i in api.objects],
            "a specified object",
        )
        return name.lower(), doc


@dataclass
class Synthesizer:
    """Builds FunctionDefs from live examples or meta-prompting forms."""

    namer: NameDocProvider = field(default_factory=MockNameDocProvider)
    lift_policy: str = "manipulated"

    def synthesize_function(self, example: TeachExample, api: API) -> FunctionDef:
        candidate = select_lifting(example, api, self.lift_policy)
        body = build_template(example.decomposition, candidate)
        name, doc = self.namer.name_and_doc(example, candidate.lifted_ids, api)
        name = _resolve_collision(name, api)
        params = tuple(ParamSpec(p, description="lifted from demonstration")
                       for p in candidate.param_names)
        sig = SkillSignature(name, params, doc, provenance="taught-live")
        return FunctionDef(sig, body)

    def synthesize_from_form(self, form: TeachForm, api: API) -> FunctionDef:
        params = tuple(ParamSpec(p) for p in form.params)
        sig = SkillSignature(form.name, params, form.behavior_description,
                             provenance="taught-meta")
        return FunctionDef(sig, BodyTemplate(form.steps))


def _resolve_collision(name: str, api: API) -> str:
    if name not in api:
        return name
    for i in range(2, 10):
        candidate = f"{name}_{i}"
        if candidate not in api:
            return candidate
    raise NameCollisionError(name)

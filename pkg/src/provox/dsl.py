"""Skills DSL: object references, function registry, plans.

Plans are straight-line sequences of calls such as::

    pickup(RICE_KRISPIES); goto(LUNCH_BAG); release()

Functions live in an :class:`API` registry seeded with five base motion
primitives. Taught functions are parameterized compositions of functions
registered earlier, so the call graph is acyclic by construction and
inlining always terminates.

All types are immutable values; mutation happens only by producing a new
``API``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

from .errors import (
    ArityMismatchError,
    BasePrimitiveImmutableError,
    CyclicReferenceError,
    DuplicateNameError,
    NotFoundError,
    PlanSyntaxError,
    ReferencedByOthersError,
    SchemaVersionMismatchError,
    UnboundParamError,
    UnknownBodyFunctionError,
    UnknownFunctionError,
    UnknownObjectError,
    UnreferencedParamError,
)

OBJECT_ID_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")
IDENT_RE = re.compile(r"^[a-z][a-z0-9_]*$")

BASE_PRIMITIVES = ("goto", "pickup", "release", "open_gripper", "close_gripper")

# Expansion depth cannot exceed the registry size under acyclicity; the cap
# is a defensive guard against internal bugs only.
MAX_INLINE_DEPTH = 16

CONTEXT_SCHEMA_VERSION = 1

_BASE_DOCS = {
    "goto": "Move the gripper directly above the given object.",
    "pickup": "Pick up the given object with the gripper.",
    "release": "Release the held object, dropping it into a container if one is below.",
    "open_gripper": "Open the gripper.",
    "close_gripper": "Close the gripper, grasping an object directly beneath if present.",
}


@dataclass(frozen=True)
class ObjectRef:
    """A scene object addressable by symbolic id (e.g. LUNCH_BAG)."""

    id: str
    display_name: str
    aliases: tuple[str, ...]
    is_container: bool = False
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not OBJECT_ID_RE.match(self.id):
            raise UnknownObjectError(self.id)
        if not self.aliases:
            raise ValueError(f"object {self.id} needs at least one alias")
        for a in self.aliases:
            if a != a.lower():
                raise ValueError(f"alias {a!r} of {self.id} must be lowercase")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str = "object-ref"
    description: str = ""

    def __post_init__(self):
        if not IDENT_RE.match(self.name):
            raise ValueError(f"bad parameter name {self.name!r}")
        if self.kind != "object-ref":
            raise ValueError(f"unsupported parameter kind {self.kind!r}")


@dataclass(frozen=True)
class SkillSignature:
    """Name, ordered parameters, and documentation of a callable skill."""

    name: str
    params: tuple[ParamSpec, ...] = ()
    doc: str = ""
    provenance: str = "taught-live"  # base | taught-meta | taught-live

    def __post_init__(self):
        if not IDENT_RE.match(self.name):
            raise ValueError(f"bad function name {self.name!r}")
        seen = set()
        for p in self.params:
            if p.name in seen:
                raise ValueError(f"duplicate parameter {p.name!r} in {self.name}")
            seen.add(p.name)

    @property
    def arity(self) -> int:
        return len(self.params)

    def render(self) -> str:
        args = ", ".join(f"{p.name}: ObjectRef" for p in self.params)
        return f"{self.name}({args})"


@dataclass(frozen=True)
class Call:
    """A grounded invocation: function name plus ObjectRef-id arguments."""

    function: str
    args: tuple[str, ...] = ()

    def render(self) -> str:
        return f"{self.function}({', '.join(self.args)})"


@dataclass(frozen=True)
class Plan:
    """An ordered, straight-line sequence of calls."""

    calls: tuple[Call, ...] = ()

    def __len__(self) -> int:
        return len(self.calls)

    def __iter__(self):
        return iter(self.calls)

    def render(self) -> str:
        return render_plan(self)


@dataclass(frozen=True)
class TemplateStep:
    """One body step; args are either ``$param`` references or object ids."""

    function: str
    args: tuple[str, ...] = ()

    def render(self) -> str:
        return f"{self.function}({', '.join(self.args)})"

    def bind(self, binding: dict[str, str]) -> Call:
        return Call(self.function, tuple(binding[a[1:]] if a.startswith("$") else a for a in self.args))


@dataclass(frozen=True)
class BodyTemplate:
    steps: tuple[TemplateStep, ...]

    def param_names(self) -> set[str]:
        return {a[1:] for s in self.steps for a in s.args if a.startswith("$")}

    def constant_ids(self) -> set[str]:
        return {a for s in self.steps for a in s.args if not a.startswith("$")}

    def referenced_functions(self) -> set[str]:
        return {s.function for s in self.steps}


@dataclass(frozen=True)
class FunctionDef:
    """A registry entry: base primitive (body None) or taught composition."""

    signature: SkillSignature
    body: BodyTemplate | None = None

    @property
    def is_primitive(self) -> bool:
        return self.body is None


@dataclass(frozen=True)
class API:
    """Immutable registry of callable functions plus the scene's objects.

    Base primitives are always present and can never be shadowed, edited,
    or deleted. Taught entries keep registration order, which the prompt
    renderer and tool schema rely on.
    """

    entries: dict[str, FunctionDef] = field(default_factory=dict)
    objects: dict[str, ObjectRef] = field(default_factory=dict)

    base_names = frozenset(BASE_PRIMITIVES)

    @classmethod
    def base(cls, objects: list[ObjectRef] | tuple[ObjectRef, ...] = ()) -> "API":
        entries = {}
        for name in BASE_PRIMITIVES:
            params = (ParamSpec("obj", description="target object"),) if name in ("goto", "pickup") else ()
            entries[name] = FunctionDef(
                SkillSignature(name, params, _BASE_DOCS[name], provenance="base")
            )
        return cls(entries=entries, objects={o.id: o for o in objects})

    # -- queries ------------------------------------------------------

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def get(self, name: str) -> FunctionDef:
        try:
            return self.entries[name]
        except KeyError:
            raise UnknownFunctionError(name) from None

    def taught(self) -> list[FunctionDef]:
        return [d for d in self.entries.values() if not d.is_primitive]

    def listing(self) -> list[FunctionDef]:
        """All entries, base primitives first, taught in registration order."""
        return [self.entries[n] for n in BASE_PRIMITIVES] + self.taught()

    def referrers_of(self, name: str) -> list[str]:
        return [
            d.signature.name
            for d in self.taught()
            if name in d.body.referenced_functions()
        ]

    # -- mutation (returns a new API) ----------------------------------

    def _check_body(self, defn: FunctionDef, allowed: dict[str, FunctionDef]) -> None:
        body = defn.body
        if body is None or not body.steps:
            raise ValueError("taught function needs a non-empty body")
        declared = {p.name for p in defn.signature.params}
        for step in body.steps:
            if step.function not in allowed:
                raise UnknownBodyFunctionError(step.function)
            target = allowed[step.function]
            if len(step.args) != target.signature.arity:
                raise ArityMismatchError(step.function, target.signature.arity, len(step.args))
            for a in step.args:
                if a.startswith("$"):
                    if a[1:] not in declared:
                        raise UnboundParamError(a[1:])
                elif a not in self.objects:
                    raise UnknownObjectError(a)
        used = body.param_names()
        for p in defn.signature.params:
            if p.name not in used:
                raise UnreferencedParamError(p.name)

    def register(self, defn: FunctionDef) -> "API":
        name = defn.signature.name
        if name in self.entries:
            raise DuplicateNameError(name)
        self._check_body(defn, self.entries)
        return replace(self, entries={**self.entries, name: defn})

    def update(self, name: str, defn: FunctionDef) -> "API":
        if name in self.base_names:
            raise BasePrimitiveImmutableError(name)
        if name not in self.entries:
            raise NotFoundError(name)
        if defn.signature.name != name:
            raise ValueError("update cannot rename a function")
        referrers = self.referrers_of(name)
        if referrers and defn.signature.arity != self.entries[name].signature.arity:
            raise ReferencedByOthersError(name, referrers)
        # Only functions registered before `name` may appear in the new
        # body; that keeps the reference graph acyclic without a cycle scan.
        allowed = {}
        for n, d in self.entries.items():
            if n == name:
                break
            allowed[n] = d
        try:
            self._check_body(defn, allowed)
        except UnknownBodyFunctionError as err:
            if err.name in self.entries:
                raise CyclicReferenceError(name) from None
            raise
        return replace(self, entries={**self.entries, name: defn})

    def remove(self, name: str) -> "API":
        if name in self.base_names:
            raise BasePrimitiveImmutableError(name)
        if name not in self.entries:
            raise NotFoundError(name)
        referrers = self.referrers_of(name)
        if referrers:
            raise ReferencedByOthersError(name, referrers)
        entries = {n: d for n, d in self.entries.items() if n != name}
        return replace(self, entries=entries)

    # -- serialization --------------------------------------------------

    def to_json_obj(self) -> dict:
        """Export taught functions only; base primitives are implicit."""
        functions = []
        for d in self.taught():
            functions.append(
                {
                    "name": d.signature.name,
                    "doc": d.signature.doc,
                    "params": [
                        {"name": p.name, "kind": p.kind, "description": p.description}
                        for p in d.signature.params
                    ],
                    "body": [s.render() for s in d.body.steps],
                }
            )
        return {"version": CONTEXT_SCHEMA_VERSION, "functions": functions}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json_obj(cls, obj: dict, objects: list[ObjectRef] | tuple[ObjectRef, ...],
                      provenance: str = "taught-meta") -> "API":
        if obj.get("version") != CONTEXT_SCHEMA_VERSION:
            raise SchemaVersionMismatchError(obj.get("version"))
        api = cls.base(objects)
        for f in obj.get("functions", []):
            params = tuple(
                ParamSpec(p["name"], p.get("kind", "object-ref"), p.get("description", ""))
                for p in f.get("params", [])
            )
            steps = tuple(_parse_template_step(s) for s in f["body"])
            sig = SkillSignature(f["name"], params, f.get("doc", ""), provenance=provenance)
            api = api.register(FunctionDef(sig, BodyTemplate(steps)))
        return api


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<ident>[A-Za-z_$][A-Za-z0-9_]*)|(?P<punct>[();,])|(?P<bad>\S))")


def _tokenize(text: str):
    tokens = []  # (kind, value, position)
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            break
        if m.group("bad") is not None:
            raise PlanSyntaxError("unexpected character", m.start("bad"), m.group("bad"))
        if m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append((m.group("punct"), m.group("punct"), m.start("punct")))
        pos = m.end()
    return tokens


def _parse_calls(text: str) -> list[tuple[str, tuple[str, ...], int]]:
    """Shared surface parser: ``name(ARG, ...)`` items separated by ``;``.

    Returns (function, args, position) triples without any registry checks.
    """
    tokens = _tokenize(text)
    calls = []
    i = 0
    n = len(tokens)
    while i < n:
        kind, value, pos = tokens[i]
        if kind != "ident" or value.startswith("$"):
            raise PlanSyntaxError("expected function name", pos, value)
        fname, fpos = value, pos
        i += 1
        if i >= n or tokens[i][0] != "(":
            raise PlanSyntaxError("expected '('", tokens[i][2] if i < n else len(text))
        i += 1
        args: list[str] = []
        if i < n and tokens[i][0] == ")":
            i += 1
        else:
            while True:
                if i >= n or tokens[i][0] != "ident":
                    raise PlanSyntaxError("expected argument", tokens[i][2] if i < n else len(text))
                args.append(tokens[i][1])
                i += 1
                if i < n and tokens[i][0] == ",":
                    i += 1
                    continue
                if i < n and tokens[i][0] == ")":
                    i += 1
                    break
                raise PlanSyntaxError("expected ',' or ')'", tokens[i][2] if i < n else len(text))
        calls.append((fname, tuple(args), fpos))
        if i < n:
            if tokens[i][0] != ";":
                raise PlanSyntaxError("expected ';' between calls", tokens[i][2], tokens[i][1])
            i += 1  # trailing ';' tolerated
    return calls


def _parse_template_step(text: str) -> TemplateStep:
    items = _parse_calls(text)
    if len(items) != 1:
        raise PlanSyntaxError("expected exactly one call", 0, text)
    fname, args, _ = items[0]
    return TemplateStep(fname, args)


def validate_plan(plan: Plan, api: API) -> Plan:
    for call in plan.calls:
        defn = api.get(call.function)
        if len(call.args) != defn.signature.arity:
            raise ArityMismatchError(call.function, defn.signature.arity, len(call.args))
        for a in call.args:
            if a not in api.objects:
                raise UnknownObjectError(a)
    return plan


def parse_plan(text: str, api: API) -> Plan:
    """Parse and validate plan source in one step."""
    calls = []
    for fname, args, _pos in _parse_calls(text):
        if any(a.startswith("$") for a in args):
            raise UnknownObjectError(next(a for a in args if a.startswith("$")))
        calls.append(Call(fname, args))
    return validate_plan(Plan(tuple(calls)), api)


def render_plan(plan: Plan) -> str:
    """Canonical source form: '; '-separated, 'f(A, B)' per call."""
    return "; ".join(c.render() for c in plan.calls)


# ---------------------------------------------------------------------------
# Inlining
# ---------------------------------------------------------------------------

def inline_plan(plan: Plan, api: API) -> Plan:
    """Expand taught functions until only base primitives remain.

    Expansion is leftmost-innermost via an explicit worklist, preserving
    call order.
    """
    out: list[Call] = []
    # Stack holds (call, depth); pushed in reverse so pops come leftmost-first.
    stack: list[tuple[Call, int]] = [(c, 0) for c in reversed(plan.calls)]
    while stack:
        call, depth = stack.pop()
        if depth > MAX_INLINE_DEPTH:
            raise RuntimeError(f"inline depth exceeded {MAX_INLINE_DEPTH}; registry corrupt?")
        defn = api.get(call.function)
        if defn.is_primitive:
            out.append(call)
            continue
        binding = {p.name: a for p, a in zip(defn.signature.params, call.args)}
        expanded = [step.bind(binding) for step in defn.body.steps]
        for c in reversed(expanded):
            stack.append((c, depth + 1))
    return Plan(tuple(out))


def is_primitive_plan(plan: Plan) -> bool:
    return all(c.function in BASE_PRIMITIVES for c in plan.calls)

"""Personalizable, proactive task-planning engine for tabletop collaboration."""

from .dsl import (
    API,
    BodyTemplate,
    Call,
    FunctionDef,
    ObjectRef,
    ParamSpec,
    Plan,
    SkillSignature,
    TemplateStep,
    inline_plan,
    parse_plan,
    render_plan,
)
from .planner import BackendConfig, PlannerRequest, PlannerResponse, generate
from .session import Session
from .synthesis import Synthesizer, TeachExample, TeachForm
from .world import SceneSpec, WorldState, exec_call, exec_plan, load_scene, load_scene_file

__version__ = "0.1.0"

__all__ = [
    "API",
    "BackendConfig",
    "BodyTemplate",
    "Call",
    "FunctionDef",
    "ObjectRef",
    "ParamSpec",
    "Plan",
    "PlannerRequest",
    "PlannerResponse",
    "SceneSpec",
    "Session",
    "SkillSignature",
    "Synthesizer",
    "TeachExample",
    "TeachForm",
    "TemplateStep",
    "WorldState",
    "exec_call",
    "exec_plan",
    "generate",
    "inline_plan",
    "load_scene",
    "load_scene_file",
    "parse_plan",
    "render_plan",
    "__version__",
]

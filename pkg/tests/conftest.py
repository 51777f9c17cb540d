from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from provox.dsl import API, parse_plan
from provox.synthesis import TeachForm, TemplateStep
from provox.world import load_scene_file

REPO = Path(__file__).parent.parent
SCENES = REPO / "scenes"
FIXTURES = REPO / "fixtures"


@pytest.fixture(scope="session")
def lunchbag_scene():
    return load_scene_file(SCENES / "lunchbag.json")


@pytest.fixture(scope="session")
def grocery_scene():
    return load_scene_file(SCENES / "grocery.json")


@pytest.fixture
def base_api(lunchbag_scene):
    return API.base(lunchbag_scene.objects)


PACK_BODY = "pickup(RICE_KRISPIES); goto(LUNCH_BAG); release()"


def make_pack_form() -> TeachForm:
    return TeachForm(
        name="pack",
        behavior_description="packing food for lunch",
        params=("food",),
        steps=(
            TemplateStep("pickup", ("$food",)),
            TemplateStep("goto", ("LUNCH_BAG",)),
            TemplateStep("release", ()),
        ),
    )


@pytest.fixture
def pack_api(base_api):
    """Base registry plus the canonical taught pack(obj)."""
    from provox.dsl import BodyTemplate, FunctionDef, ParamSpec, SkillSignature

    sig = SkillSignature(
        "pack", (ParamSpec("obj"),), "Pack a specified object in the lunch bag",
        provenance="taught-meta",
    )
    body = BodyTemplate((
        TemplateStep("pickup", ("$obj",)),
        TemplateStep("goto", ("LUNCH_BAG",)),
        TemplateStep("release", ()),
    ))
    return base_api.register(FunctionDef(sig, body))


@pytest.fixture
def parse(base_api):
    return lambda text: parse_plan(text, base_api)

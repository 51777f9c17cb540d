from __future__ import annotations

import json

import pytest

from provox.dsl import API, parse_plan
from provox.errors import InvalidPlanAfterRetriesError, UnknownFunctionError
from provox.planner import (
    BackendConfig,
    PlanRecord,
    PlannerInput,
    PlannerRequest,
    RawProposal,
    ScriptedBackend,
    assemble_prompt,
    derive_tool_schema,
    generate,
    load_backend_config,
    validate_and_retry,
)
from provox.proactive import build_trigger

from conftest import FIXTURES

NEUTRAL = "to help the user with a tabletop task"
KIDS_LUNCH_GOAL = "pack my kids' lunch with Skittles and Rice-Krispies while I make their sandwiches"


def _executed(api, text):
    plan = parse_plan(text, api)
    return tuple(plan.calls)


# -- prompt assembly ------------------------------------------------------------

def test_prompt_matches_golden_base(base_api):
    request = PlannerRequest(
        goal=NEUTRAL, api=base_api,
        input=PlannerInput.utterance("put the skittles in the bag"),
    )
    golden = (FIXTURES / "golden" / "prompt_base_empty.txt").read_text(encoding="utf-8")
    assert assemble_prompt(request) == golden


def test_prompt_matches_golden_with_history(pack_api):
    plan1 = parse_plan("pack(SKITTLES)", pack_api)
    plan2 = parse_plan("pack(RICE_KRISPIES)", pack_api)
    history = (
        PlanRecord(plan=plan1, utterance="pack the skittles",
                   executed_primitives=_executed(
                       pack_api, "pickup(SKITTLES); goto(LUNCH_BAG); release()")),
        PlanRecord(plan=plan2, utterance=None, rejected=True),
    )
    request = PlannerRequest(
        goal=KIDS_LUNCH_GOAL, api=pack_api,
        input=PlannerInput.proactive(build_trigger(KIDS_LUNCH_GOAL)),
        history=history,
    )
    golden = (FIXTURES / "golden" / "prompt_pack_history.txt").read_text(encoding="utf-8")
    assert assemble_prompt(request) == golden


def test_prompt_deterministic(base_api):
    request = PlannerRequest(goal=NEUTRAL, api=base_api,
                             input=PlannerInput.utterance("hello"))
    assert assemble_prompt(request) == assemble_prompt(request)


def test_prompt_truncates_long_history(pack_api):
    deliver = _executed(pack_api, "pickup(SKITTLES); goto(LUNCH_BAG); release()")
    step = PlanRecord(plan=parse_plan("pack(SKITTLES)", pack_api),
                      utterance="again", executed_primitives=deliver)
    request = PlannerRequest(
        goal=KIDS_LUNCH_GOAL, api=pack_api,
        input=PlannerInput.utterance("done yet?"),
        history=tuple([step] * 25),
    )
    prompt = assemble_prompt(request)
    assert "[5 earlier steps; delivered so far: SKITTLES]" in prompt
    assert prompt.count("User: again") == 20


# -- tool schema ------------------------------------------------------------------

def test_tool_schema_counts(base_api, pack_api):
    tools = derive_tool_schema(base_api)
    assert len(tools) == 6  # 5 primitives + submit_plan
    pickup = next(t for t in tools if t["function"]["name"] == "pickup")
    assert pickup["function"]["parameters"]["properties"]["obj"]["enum"] == \
        ["LUNCH_BAG", "SKITTLES", "RICE_KRISPIES", "GUMMIES", "HAND_SANITIZER"]
    assert len(derive_tool_schema(pack_api)) == 7


def test_tool_schema_empty_scene():
    api = API.base(())
    tools = derive_tool_schema(api)
    assert len(tools) == 6
    pickup = next(t for t in tools if t["function"]["name"] == "pickup")
    assert pickup["function"]["parameters"]["properties"]["obj"]["enum"] == []


def test_tool_schema_matches_golden(base_api, pack_api):
    for name, api in [("tool_schema_base.json", base_api), ("tool_schema_pack.json", pack_api)]:
        golden = json.loads((FIXTURES / "golden" / name).read_text(encoding="utf-8"))
        assert derive_tool_schema(api) == golden


# -- mock backend ----------------------------------------------------------------

MOCK = BackendConfig(kind="mock")


def test_mock_proactive_prefers_taught(pack_api):
    request = PlannerRequest(
        goal="pack Skittles and Rice Krispies in the lunch bag", api=pack_api,
        input=PlannerInput.proactive(build_trigger("pack Skittles and Rice Krispies in the lunch bag")),
    )
    response = generate(request, MOCK)
    assert response.outcome == "plan"
    assert response.plan.render() == "pack(SKITTLES)"


def test_mock_proactive_primitive_fallback(base_api):
    request = PlannerRequest(
        goal="pack Skittles and Rice Krispies in the lunch bag", api=base_api,
        input=PlannerInput.proactive(build_trigger("x")),
    )
    response = generate(request, MOCK)
    assert response.plan.render() == "pickup(SKITTLES); goto(LUNCH_BAG); release()"


def test_mock_proactive_done_when_delivered(base_api):
    deliver_s = _executed(base_api, "pickup(SKITTLES); goto(LUNCH_BAG); release()")
    deliver_r = _executed(base_api, "pickup(RICE_KRISPIES); goto(LUNCH_BAG); release()")
    history = (
        PlanRecord(plan=parse_plan("pickup(SKITTLES); goto(LUNCH_BAG); release()", base_api),
                   utterance="a", executed_primitives=deliver_s),
        PlanRecord(plan=parse_plan("pickup(RICE_KRISPIES); goto(LUNCH_BAG); release()", base_api),
                   utterance="b", executed_primitives=deliver_r),
    )
    request = PlannerRequest(
        goal="pack Skittles and Rice Krispies in the lunch bag", api=base_api,
        input=PlannerInput.proactive(build_trigger("x")), history=history,
    )
    assert generate(request, MOCK).outcome == "done"


def test_mock_utterance_primitive(base_api):
    request = PlannerRequest(goal="", api=base_api,
                             input=PlannerInput.utterance("put the gummies in the bag"))
    response = generate(request, MOCK)
    assert response.plan.render() == "pickup(GUMMIES); goto(LUNCH_BAG); release()"


def test_mock_utterance_taught_trigger(pack_api):
    request = PlannerRequest(goal="", api=pack_api,
                             input=PlannerInput.utterance("pack the Rice Krispies in the lunchbox"))
    assert generate(request, MOCK).plan.render() == "pack(RICE_KRISPIES)"


def test_mock_utterance_clarification(base_api):
    request = PlannerRequest(goal="", api=base_api,
                             input=PlannerInput.utterance("do that again"))
    response = generate(request, MOCK)
    assert response.outcome == "clarification"
    assert response.message == "Which object do you mean?"


def test_mock_progress_invariant(pack_api):
    """Proactive iteration delivers one target per round and lands on done
    in exactly |targets| rounds with a taught delivery function."""
    goal = "pack the Skittles, the gummy candy and the hand sanitizer in the lunch bag"
    history = []
    rounds = 0
    while True:
        request = PlannerRequest(goal=goal, api=pack_api,
                                 input=PlannerInput.proactive(build_trigger(goal)),
                                 history=tuple(history))
        response = generate(request, MOCK)
        if response.outcome == "done":
            break
        rounds += 1
        assert rounds <= 4, "planner failed to converge"
        from provox.dsl import inline_plan
        history.append(PlanRecord(
            plan=response.plan, utterance=None,
            executed_primitives=tuple(inline_plan(response.plan, pack_api).calls),
        ))
    assert rounds == 3


# -- validation & retry -------------------------------------------------------------

def test_scripted_invalid_then_valid(base_api):
    backend = ScriptedBackend([
        RawProposal("calls", (("pack", ("SKITTLES",)),)),  # unknown function
        RawProposal("calls", (("pickup", ("SKITTLES",)),)),
    ])
    request = PlannerRequest(goal="", api=base_api, input=PlannerInput.utterance("x"))
    response = validate_and_retry(backend, request, BackendConfig(max_retries=2))
    assert response.plan.render() == "pickup(SKITTLES)"
    assert response.retries == 1


def test_retries_exhausted(base_api):
    backend = ScriptedBackend([RawProposal("calls", (("pack", ("SKITTLES",)),))])
    request = PlannerRequest(goal="", api=base_api, input=PlannerInput.utterance("x"))
    with pytest.raises(InvalidPlanAfterRetriesError) as exc:
        validate_and_retry(backend, request, BackendConfig(max_retries=2))
    assert isinstance(exc.value.last_error, UnknownFunctionError)
    assert exc.value.attempts == 3


def test_valid_first_attempt_untouched(base_api):
    backend = ScriptedBackend([RawProposal("calls", (("release", ()),))])
    request = PlannerRequest(goal="", api=base_api, input=PlannerInput.utterance("x"))
    response = validate_and_retry(backend, request, BackendConfig())
    assert response.retries == 0 and response.plan.render() == "release()"


def test_plan_length_cap(base_api):
    calls = tuple((("release", ()),) * 13)
    backend = ScriptedBackend([RawProposal("calls", calls)])
    request = PlannerRequest(goal="", api=base_api, input=PlannerInput.utterance("x"))
    with pytest.raises(InvalidPlanAfterRetriesError):
        validate_and_retry(backend, request, BackendConfig(max_retries=0))


# -- config loading ------------------------------------------------------------------

def test_load_config_json(tmp_path):
    path = tmp_path / "backend.json"
    path.write_text(json.dumps({
        "backend": {"kind": "remote", "endpoint": "https://x.test/v1", "model": "m",
                    "temperature": 0.5},
    }))
    config = load_backend_config(path)
    assert config.kind == "remote" and config.temperature == 0.5


def test_load_config_toml(tmp_path):
    path = tmp_path / "backend.toml"
    path.write_text('[backend]\nkind = "remote"\nendpoint = "https://x.test/v1"\nmodel = "m"\n')
    config = load_backend_config(path)
    assert config.model == "m"


def test_config_overrides(tmp_path):
    config = load_backend_config(None, kind="mock")
    assert config.kind == "mock"
    with pytest.raises(ValueError):
        BackendConfig(kind="remote")

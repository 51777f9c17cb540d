from __future__ import annotations

import json
import random

import pytest

from provox.dsl import API, ObjectRef, parse_plan, render_plan
from provox.errors import (
    BackendUnavailableError,
    ReferencedByOthersError,
    SchemaVersionMismatchError,
    UnknownObjectError,
    WrongStateError,
)
from provox.planner import BackendConfig
from provox.session import (
    AWAITING_CONFIRMATION,
    DONE,
    IDLE,
    LIVE,
    META,
    Session,
    replay_transcript,
)
from provox.synthesis import TeachExample, TeachForm, TemplateStep
from provox.world import SceneSpec

from conftest import make_pack_form

KIDS_LUNCH_GOAL = "pack my kids' lunch with Skittles and Rice-Krispies while I make their sandwiches"
LUNCH_GOAL = "pack the Skittles, the Rice Krispies treat, and the hand sanitizer in the lunch bag"


def live_session(scene, *, proactive=True, auto_confirm=False, goal=LUNCH_GOAL):
    return Session(scene, BackendConfig(), mode=LIVE, proactive=proactive,
                   auto_confirm_user_plans=auto_confirm, goal=goal)


def teach_pack(session):
    session.api = session.api.register(
        session.synthesizer.synthesize_from_form(make_pack_form(), session.api))


# -- live gating -------------------------------------------------------------

def test_utterance_produces_pending_plan(lunchbag_scene):
    session = live_session(lunchbag_scene)
    outcome = session.handle_utterance("put the skittles in the bag")
    assert outcome.kind == "pending"
    assert session.state == AWAITING_CONFIRMATION
    assert session.pending.plan.render() == "pickup(SKITTLES); goto(LUNCH_BAG); release()"
    assert session.pending.origin == "user"
    assert session.world.inside == {}  # nothing executed yet


def test_utterance_wrong_state(lunchbag_scene):
    session = live_session(lunchbag_scene)
    session.handle_utterance("put the skittles in the bag")
    with pytest.raises(WrongStateError):
        session.handle_utterance("put the gummies in the bag")


def test_utterance_taught_function(lunchbag_scene):
    session = live_session(lunchbag_scene)
    teach_pack(session)
    outcome = session.handle_utterance("pack the Rice Krispies in the lunchbox")
    assert session.pending.plan.render() == "pack(RICE_KRISPIES)"
    assert outcome.kind == "pending"


def test_confirm_executes_and_suggests(lunchbag_scene):
    session = live_session(lunchbag_scene)
    teach_pack(session)
    session.handle_utterance("pack the skittles")
    outcome = session.confirm()
    assert outcome.step.execution.status == "completed"
    assert session.world.inside == {"SKITTLES": "LUNCH_BAG"}
    # proactive cadence: a fresh suggestion for the next remaining item
    assert session.state == AWAITING_CONFIRMATION
    assert session.pending.origin == "robot-proactive"
    assert session.pending.plan.render() == "pack(RICE_KRISPIES)"
    assert session.pending.gloss == "Should I pack the Rice Krispies treat next?"


def test_reject_leaves_world_unchanged(lunchbag_scene):
    session = live_session(lunchbag_scene)
    before = session.world.state_hash()
    session.handle_utterance("put the skittles in the bag")
    session.reject()
    assert session.world.state_hash() == before
    assert session.state == IDLE
    step = session.history[-1]
    assert step.confirmation == "rejected" and step.execution.status == "skipped"


def test_confirm_without_pending(lunchbag_scene):
    session = live_session(lunchbag_scene)
    with pytest.raises(WrongStateError):
        session.confirm()
    with pytest.raises(WrongStateError):
        session.reject()


def test_backend_error_surfaces_as_message(lunchbag_scene):
    class Broken:
        def propose(self, request, corrective):
            raise BackendUnavailableError("no wire")

    session = live_session(lunchbag_scene)
    session.backend = Broken()
    outcome = session.handle_utterance("put the skittles in the bag")
    assert outcome.kind == "error"
    assert session.state == IDLE


def test_clarification_keeps_idle(lunchbag_scene):
    session = live_session(lunchbag_scene)
    outcome = session.handle_utterance("do something")
    assert outcome.kind == "clarification"
    assert session.state == IDLE and session.pending is None


def test_proactive_disabled_stays_idle(lunchbag_scene):
    session = live_session(lunchbag_scene, proactive=False, auto_confirm=True)
    session.handle_utterance("put the skittles in the bag")
    assert session.state == IDLE and session.pending is None


def test_full_proactive_run_reaches_done(lunchbag_scene):
    session = live_session(lunchbag_scene, auto_confirm=True)
    teach_pack(session)
    session.handle_utterance("pack the skittles")
    while session.pending is not None:
        session.confirm()
    assert session.state == DONE
    assert set(session.world.inside) == {"SKITTLES", "RICE_KRISPIES", "HAND_SANITIZER"}
    metrics = session.compute_metrics()
    assert metrics.user_initiated == 1
    assert metrics.robot_initiated == 2
    assert metrics.robot_initiated_accepted == 2


# -- teaching ----------------------------------------------------------------

def test_teach_live_immediately_usable(lunchbag_scene, base_api):
    session = live_session(lunchbag_scene, auto_confirm=True, proactive=False)
    example = TeachExample(
        "Pack the Rice Krispies in the lunchbox",
        parse_plan("pickup(RICE_KRISPIES); goto(LUNCH_BAG); release()", base_api),
    )
    outcome = session.teach_live(example)
    assert outcome.text == "pack"
    assert session.history[-1].kind == "teach"
    session.handle_utterance("pack the gummies")
    assert session.history[-1].plan.render() == "pack(GUMMIES)"
    assert session.world.inside == {"GUMMIES": "LUNCH_BAG"}


def test_teach_live_twice_suffixes(lunchbag_scene, base_api):
    session = live_session(lunchbag_scene, proactive=False)
    example = TeachExample(
        "Pack the Rice Krispies in the lunchbox",
        parse_plan("pickup(RICE_KRISPIES); goto(LUNCH_BAG); release()", base_api),
    )
    session.teach_live(example)
    outcome = session.teach_live(example)
    assert outcome.text == "pack_2"


def test_teach_live_requires_live_mode(lunchbag_scene, base_api):
    session = Session(lunchbag_scene, BackendConfig(), mode=META)
    example = TeachExample("open up", parse_plan("open_gripper()", base_api))
    with pytest.raises(WrongStateError):
        session.teach_live(example)


# -- meta-prompting mode ------------------------------------------------------

def meta_session(scene):
    return Session(scene, BackendConfig(), mode=META)


def test_meta_flow_with_preview(lunchbag_scene):
    session = meta_session(lunchbag_scene)
    session.meta_set_goal(KIDS_LUNCH_GOAL)
    before = session.world.state_hash()

    # untaught test utterance: primitive preview or clarification, no execution
    response = session.meta_test_utterance("can you put the cereal bar in the bag?")
    assert response.outcome in ("plan", "clarification")
    if response.outcome == "plan":
        assert response.plan.render() == \
            "pickup(RICE_KRISPIES); goto(LUNCH_BAG); release()"

    session.meta_teach(make_pack_form())
    assert "pack" in session.api

    preview = session.meta_test_utterance("Put the cereal bar in my lunch.")
    assert preview.outcome == "plan"
    assert preview.plan.render() == "pack(RICE_KRISPIES)"

    # meta mode never touches the world
    assert session.world.state_hash() == before
    assert session.history == []


def test_meta_test_uses_empty_history(lunchbag_scene):
    """The preview is history-independent by construction."""
    session = meta_session(lunchbag_scene)
    session.meta_set_goal(LUNCH_GOAL)
    a = session.meta_test_utterance("put the skittles in the bag")
    b = session.meta_test_utterance("put the skittles in the bag")
    assert a == b


def test_meta_edit_and_delete(lunchbag_scene):
    session = meta_session(lunchbag_scene)
    session.meta_teach(make_pack_form())
    edited = TeachForm(
        name="pack", behavior_description="pack a snack into the lunch bag",
        params=("food",),
        steps=(TemplateStep("pickup", ("$food",)), TemplateStep("goto", ("LUNCH_BAG",)),
               TemplateStep("release", ()), TemplateStep("open_gripper", ())),
    )
    session.meta_edit("pack", edited)
    assert len(session.api.get("pack").body.steps) == 4

    session.meta_delete("pack")
    assert "pack" not in session.api


def test_meta_delete_referenced(lunchbag_scene):
    session = meta_session(lunchbag_scene)
    session.meta_teach(make_pack_form())
    session.meta_teach(TeachForm(
        name="pack_snacks", behavior_description="both snacks", params=(),
        steps=(TemplateStep("pack", ("SKITTLES",)), TemplateStep("pack", ("GUMMIES",))),
    ))
    with pytest.raises(ReferencedByOthersError):
        session.meta_delete("pack")


def test_meta_ops_rejected_in_live(lunchbag_scene):
    session = live_session(lunchbag_scene)
    with pytest.raises(WrongStateError):
        session.meta_set_goal("x")
    with pytest.raises(WrongStateError):
        session.meta_test_utterance("x")
    with pytest.raises(WrongStateError):
        session.meta_teach(make_pack_form())


def test_mode_transition_one_way(lunchbag_scene):
    session = meta_session(lunchbag_scene)
    session.to_live()
    assert session.mode == LIVE
    with pytest.raises(WrongStateError):
        session.to_live()


# -- context files --------------------------------------------------------------

def test_export_import_roundtrip(lunchbag_scene):
    session = meta_session(lunchbag_scene)
    session.meta_set_goal(KIDS_LUNCH_GOAL)
    session.meta_teach(make_pack_form())
    exported = session.export_context()
    assert exported["goal"] == KIDS_LUNCH_GOAL
    assert [f["name"] for f in exported["functions"]] == ["pack"]

    other = meta_session(lunchbag_scene)
    other.import_context(exported)
    assert other.goal == KIDS_LUNCH_GOAL
    assert other.export_context_text() == session.export_context_text()


def test_import_version_mismatch(lunchbag_scene):
    session = meta_session(lunchbag_scene)
    with pytest.raises(SchemaVersionMismatchError):
        session.import_context({"version": 2, "goal": "", "functions": []})


def test_import_unknown_object(lunchbag_scene):
    session = meta_session(lunchbag_scene)
    doc = {"version": 1, "goal": "", "functions": [
        {"name": "f", "doc": "", "params": [], "body": ["goto(PEN)"]},
    ]}
    with pytest.raises(UnknownObjectError):
        session.import_context(doc)


def test_import_empty_context_keeps_base(lunchbag_scene):
    session = meta_session(lunchbag_scene)
    session.import_context({"version": 1, "goal": "hi", "functions": []})
    assert set(session.api.entries) == set(API.base_names)


# -- metrics ----------------------------------------------------------------------

def test_metrics_empty_session(lunchbag_scene):
    metrics = live_session(lunchbag_scene).compute_metrics()
    assert metrics.total_time == 0.0
    assert metrics.user_initiated == metrics.robot_initiated == 0
    assert sum(metrics.time_breakdown.values()) == 0.0


def test_metrics_breakdown_sums(lunchbag_scene):
    session = live_session(lunchbag_scene, auto_confirm=True)
    teach_pack(session)
    session.advance_idle(60.0)
    session.handle_utterance("pack the skittles")
    while session.pending is not None:
        session.confirm()
    metrics = session.compute_metrics()
    assert metrics.total_time == pytest.approx(sum(metrics.time_breakdown.values()))
    assert metrics.time_breakdown["idle"] == 60.0
    assert metrics.time_breakdown["instructing"] == 8.0
    assert metrics.time_breakdown["confirming"] == 4.0
    assert metrics.total_time == pytest.approx(session.world.clock)


def test_non_proactive_scripted_burden(lunchbag_scene):
    session = live_session(lunchbag_scene, proactive=False, auto_confirm=True)
    teach_pack(session)
    for utterance in ["pack the skittles", "pack the rice krispies",
                      "pack the hand sanitizer"]:
        session.handle_utterance(utterance)
    metrics = session.compute_metrics()
    assert metrics.user_initiated == 3 and metrics.robot_initiated == 0
    assert set(session.world.inside) == {"SKITTLES", "RICE_KRISPIES", "HAND_SANITIZER"}


# -- history & transcripts -----------------------------------------------------------

def test_history_append_only_and_indexed(lunchbag_scene):
    session = live_session(lunchbag_scene, auto_confirm=True)
    teach_pack(session)
    session.handle_utterance("pack the skittles")
    while session.pending is not None:
        session.confirm()
    assert [s.index for s in session.history] == list(range(len(session.history)))


def test_transcript_replay(lunchbag_scene, tmp_path):
    path = tmp_path / "run.jsonl"
    session = live_session(lunchbag_scene, auto_confirm=True)
    teach_pack(session)
    session.attach_transcript(path)
    session.handle_utterance("pack the skittles")
    while session.pending is not None:
        session.confirm()
    session.close()

    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == len(session.history)
    ok, final_hash = replay_transcript(lines, lunchbag_scene)
    assert ok, final_hash
    assert final_hash == session.world.state_hash()


def test_transcript_replay_detects_tamper(lunchbag_scene, tmp_path):
    path = tmp_path / "run.jsonl"
    session = live_session(lunchbag_scene, auto_confirm=True, proactive=False)
    session.attach_transcript(path)
    session.handle_utterance("put the skittles in the bag")
    session.close()
    lines = path.read_text(encoding="utf-8").splitlines()
    doc = json.loads(lines[0])
    doc["plan_inlined"] = "pickup(GUMMIES); goto(LUNCH_BAG); release()"
    ok, detail = replay_transcript([json.dumps(doc)], lunchbag_scene)
    assert not ok and "mismatch" in detail


# -- event emission ------------------------------------------------------------------

def test_listener_receives_events(lunchbag_scene):
    session = live_session(lunchbag_scene, auto_confirm=True)
    teach_pack(session)
    events = []
    session.add_listener(lambda t, p: events.append(t))
    session.handle_utterance("pack the skittles")
    kinds = set(events)
    assert "state_changed" in kinds
    assert "execution_event" in kinds
    assert "suggestion" in kinds

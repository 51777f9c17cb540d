"""HTTP + event-stream service exposing sessions to the console UI.

All client actions go through REST; the event stream is one-way server
push (SSE, one JSON document per message). Mutating endpoints are
serialized per session with a lock, so concurrent confirm/reject resolve
to exactly one applied and one conflict.
"""

from __future__ import annotations

import json
import queue
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .dsl import parse_plan, render_plan
from .errors import NotFoundError, ProvoxError, WrongStateError
from .planner import BackendConfig
from .session import LIVE, META, Session
from .synthesis import TeachExample, TeachForm, TemplateStep
from .world import SceneSpec, load_scene_file

_STATUS: dict[str, int] = {
    "WrongState": 409,
    "NotFound": 422,
    "BackendUnavailable": 502,
}


@dataclass
class SessionHandle:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list[queue.Queue] = field(default_factory=list)

    def publish(self, event_type: str, payload: dict) -> None:
        message = {"type": event_type, "payload": payload}
        for q in list(self.subscribers):
            q.put(message)


@dataclass
class ServiceConfig:
    scene_path: str
    backend: BackendConfig = field(default_factory=BackendConfig)
    proactive: bool = True
    static_dir: str | None = None


class CreateSessionBody(BaseModel):
    scene: str | None = None
    mode: str = META
    backend: dict | None = None
    proactive: bool | None = None
    context: dict | None = None
    auto_confirm_user_plans: bool = False


class TextBody(BaseModel):
    text: str


class ModeBody(BaseModel):
    mode: str


class TeachBody(BaseModel):
    form: dict | None = None
    example: dict | None = None


class FormBody(BaseModel):
    name: str
    behavior_description: str = ""
    params: list[str] = []
    steps: list[dict] = []


def _parse_form(obj: dict) -> TeachForm:
    steps = tuple(
        TemplateStep(s["function"], tuple(s.get("args", []))) for s in obj.get("steps", [])
    )
    return TeachForm(
        name=obj["name"],
        behavior_description=obj.get("behavior_description", ""),
        params=tuple(obj.get("params", [])),
        steps=steps,
    )


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="provox", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    handles: dict[str, SessionHandle] = {}
    default_scene = load_scene_file(config.scene_path)

    def get_handle(session_id: str) -> SessionHandle:
        handle = handles.get(session_id)
        if handle is None:
            raise KeyError(session_id)
        return handle

    @app.exception_handler(ProvoxError)
    async def provox_error(request: Request, err: ProvoxError):
        status = _STATUS.get(err.code, 422)
        return JSONResponse(status_code=status, content={"error": err.code, "detail": err.message})

    @app.exception_handler(KeyError)
    async def unknown_session(request: Request, err: KeyError):
        return JSONResponse(status_code=404, content={"error": "UnknownSession"})

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        scene: SceneSpec = load_scene_file(body.scene) if body.scene else default_scene
        backend_config = (
            BackendConfig(**body.backend) if body.backend else config.backend
        )
        session = Session(
            scene=scene,
            backend_config=backend_config,
            mode=body.mode,
            proactive=config.proactive if body.proactive is None else body.proactive,
            auto_confirm_user_plans=body.auto_confirm_user_plans,
        )
        if body.context:
            session.import_context(body.context)
        session_id = uuid.uuid4().hex[:12]
        handle = SessionHandle(session=session)
        session.add_listener(handle.publish)
        handles[session_id] = handle
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return get_handle(session_id).session.snapshot()

    @app.post("/sessions/{session_id}/utterance")
    def utterance(session_id: str, body: TextBody):
        handle = get_handle(session_id)
        with handle.lock:
            outcome = handle.session.handle_utterance(body.text)
        return {
            "kind": outcome.kind,
            "text": outcome.text,
            "plan": render_plan(outcome.plan) if outcome.plan else None,
        }

    @app.post("/sessions/{session_id}/confirm")
    def confirm(session_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            outcome = handle.session.confirm()
        return {"kind": outcome.kind, "plan": render_plan(outcome.plan)}

    @app.post("/sessions/{session_id}/reject")
    def reject(session_id: str):
        handle = get_handle(session_id)
        with handle.lock:
            handle.session.reject()
        return {"kind": "rejected"}

    @app.post("/sessions/{session_id}/teach")
    def teach(session_id: str, body: TeachBody):
        handle = get_handle(session_id)
        session = handle.session
        with handle.lock:
            if body.form is not None:
                form = _parse_form(body.form)
                if session.mode == META:
                    outcome = session.meta_teach(form)
                else:
                    raise WrongStateError("form teaching is a meta-prompting operation")
            elif body.example is not None:
                example = TeachExample(
                    trigger_utterance=body.example["utterance"],
                    decomposition=parse_plan(body.example["decomposition"], session.api),
                )
                outcome = session.teach_live(example)
            else:
                raise WrongStateError("teach requires a form or an example")
        return {"kind": outcome.kind, "name": outcome.text}

    @app.put("/sessions/{session_id}/functions/{name}")
    def edit_function(session_id: str, name: str, body: FormBody):
        handle = get_handle(session_id)
        with handle.lock:
            handle.session.meta_edit(name, _parse_form(body.model_dump()))
        return {"kind": "updated", "name": name}

    @app.delete("/sessions/{session_id}/functions/{name}")
    def delete_function(session_id: str, name: str):
        handle = get_handle(session_id)
        with handle.lock:
            handle.session.meta_delete(name)
        return {"kind": "deleted", "name": name}

    @app.put("/sessions/{session_id}/goal")
    def set_goal(session_id: str, body: TextBody):
        handle = get_handle(session_id)
        with handle.lock:
            handle.session.meta_set_goal(body.text)
        return {"kind": "goal", "text": body.text}

    @app.post("/sessions/{session_id}/test-utterance")
    def test_utterance(session_id: str, body: TextBody):
        handle = get_handle(session_id)
        with handle.lock:
            response = handle.session.meta_test_utterance(body.text)
        return {
            "outcome": response.outcome,
            "plan": render_plan(response.plan) if response.plan else None,
            "message": response.message,
        }

    @app.post("/sessions/{session_id}/mode")
    def set_mode(session_id: str, body: ModeBody):
        handle = get_handle(session_id)
        if body.mode != LIVE:
            raise WrongStateError("the only mode transition is meta-prompting -> live")
        with handle.lock:
            handle.session.to_live()
        return {"kind": "mode", "mode": LIVE}

    @app.get("/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        return get_handle(session_id).session.compute_metrics().to_json_obj()

    @app.get("/sessions/{session_id}/export")
    def export_context(session_id: str):
        text = get_handle(session_id).session.export_context_text()
        return Response(content=text, media_type="application/json")

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str, limit: int | None = None):
        """One-way server push; ``limit`` closes the stream after that many
        messages (useful for polling clients and tests)."""
        handle = get_handle(session_id)
        q: queue.Queue = queue.Queue()
        handle.subscribers.append(q)
        q.put({"type": "state_changed", "payload": handle.session.snapshot()})

        def stream():
            sent = 0
            try:
                while limit is None or sent < limit:
                    try:
                        message = q.get(timeout=0.25 if limit is not None else 15.0)
                    except queue.Empty:
                        if limit is not None:
                            break
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {json.dumps(message, ensure_ascii=False)}\n\n"
                    sent += 1
            finally:
                if q in handle.subscribers:
                    handle.subscribers.remove(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if config.static_dir and Path(config.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app

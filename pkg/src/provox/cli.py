"""Command line: interactive REPL, efficacy evaluation, replay, and serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .dsl import API, parse_plan, render_plan
from .errors import ProvoxError
from .evaluation import (
    CONDITIONS,
    ReferencePlan,
    load_user_context,
    run_study,
)
from .planner import BackendConfig, load_backend_config
from .session import LIVE, META, Session, replay_transcript
from .synthesis import TeachExample
from .world import load_scene_file


def _backend_config(backend: str, config_file: str | None, endpoint: str | None,
                    model: str | None) -> BackendConfig:
    return load_backend_config(config_file, kind=backend, endpoint=endpoint, model=model)


@click.group()
def main():
    """Personalizable, proactive tabletop collaboration engine."""


@main.command()
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["mock", "remote"]), default="mock")
@click.option("--context", "context_path", type=click.Path(exists=True), default=None)
@click.option("--proactive/--no-proactive", default=True)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--transcript", type=click.Path(), default=None,
              help="Append interaction steps to this JSONL file.")
def repl(scene_path, backend, context_path, proactive, config_file, endpoint, model, transcript):
    """Interactive terminal session (headless equivalent of the UI)."""
    scene = load_scene_file(scene_path)
    session = Session(
        scene,
        backend_config=_backend_config(backend, config_file, endpoint, model),
        mode=LIVE,
        proactive=proactive,
        auto_confirm_user_plans=True,
    )
    if context_path:
        session.import_context(json.loads(Path(context_path).read_text(encoding="utf-8")))
    if transcript:
        session.attach_transcript(transcript)

    def show(prefix, text):
        click.echo(f"[{prefix}] {text}")

    session.add_listener(lambda t, p: show("event", t) if t == "state_changed" else None)
    show("info", f"scene {scene_path}; goal: {session.goal or '(none)'}")
    show("info", "commands: :teach <utterance> := <plan>, :confirm, :reject, "
                 ":goal <text>, :metrics, :export <file>, :idle <s>, :quit")
    while True:
        try:
            line = input("you> ").strip()
        except EOFError:
            break
        if not line:
            continue
        try:
            if line == ":quit":
                break
            elif line == ":confirm":
                outcome = session.confirm()
                show("robot", f"executed {render_plan(outcome.plan)}")
            elif line == ":reject":
                session.reject()
                show("robot", "okay, standing by")
            elif line.startswith(":goal "):
                session.goal = line[len(":goal "):].strip()
                show("info", "goal updated")
            elif line.startswith(":teach "):
                spec_text = line[len(":teach "):]
                utterance, _, plan_text = spec_text.partition(":=")
                example = TeachExample(utterance.strip(),
                                       parse_plan(plan_text.strip(), session.api))
                outcome = session.teach_live(example)
                show("robot", f"learned {outcome.text}")
            elif line == ":metrics":
                show("info", json.dumps(session.compute_metrics().to_json_obj()))
            elif line.startswith(":export "):
                out = Path(line[len(":export "):].strip())
                out.write_text(session.export_context_text(), encoding="utf-8")
                show("info", f"wrote {out}")
            elif line.startswith(":idle "):
                session.advance_idle(float(line[len(":idle "):]))
            elif line.startswith(":"):
                show("error", f"unknown command {line.split()[0]}")
            else:
                outcome = session.handle_utterance(line)
                if outcome.kind == "executed":
                    show("robot", f"executed {render_plan(outcome.plan)}")
                elif outcome.kind == "pending":
                    show("robot", outcome.text)
                elif outcome.kind == "clarification":
                    show("robot", outcome.text)
                elif outcome.kind == "error":
                    show("error", outcome.text)
            if session.pending is not None:
                show("robot", f"{session.pending.gloss} (:confirm / :reject)")
            if session.state == "done":
                show("robot", "goal complete!")
        except ProvoxError as err:
            show("error", f"{err.code}: {err.message}")
    session.close()


@main.command("eval")
@click.option("--contexts", "contexts_dir", required=True, type=click.Path(exists=True))
@click.option("--reference", "reference_path", required=True, type=click.Path(exists=True))
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["mock", "remote"]), default="mock")
@click.option("--conditions", "conditions_csv", default=",".join(CONDITIONS),
              help="Comma-separated subset of: " + ", ".join(CONDITIONS))
@click.option("--step-cap", type=int, default=None)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the JSON report here (otherwise stdout).")
def eval_command(contexts_dir, reference_path, scene_path, backend, conditions_csv,
                 step_cap, config_file, endpoint, model, out_path):
    """Run the meta-prompt efficacy study over a directory of contexts."""
    scene = load_scene_file(scene_path)
    base = API.base(scene.objects)
    reference = ReferencePlan(
        parse_plan(Path(reference_path).read_text(encoding="utf-8").strip(), base))
    contexts = []
    for path in sorted(Path(contexts_dir).glob("*.json")):
        obj = json.loads(path.read_text(encoding="utf-8"))
        contexts.append(load_user_context(obj, scene, name=path.stem))
    conditions = tuple(c.strip() for c in conditions_csv.split(",") if c.strip())
    report = run_study(
        contexts, reference, scene,
        _backend_config(backend, config_file, endpoint, model),
        conditions=conditions, step_cap=step_cap,
    )
    click.echo(report.table())
    if out_path:
        Path(out_path).write_text(report.to_json(), encoding="utf-8")
        click.echo(f"report written to {out_path}")
    else:
        click.echo(report.to_json())


@main.command()
@click.argument("transcript", type=click.Path(exists=True))
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
def replay(transcript, scene_path):
    """Re-execute a logged session and verify the world hashes."""
    scene = load_scene_file(scene_path)
    lines = Path(transcript).read_text(encoding="utf-8").splitlines()
    ok, detail = replay_transcript(lines, scene)
    if ok:
        click.echo(f"replay ok; final world hash {detail}")
    else:
        click.echo(f"ReplayMismatch: {detail}", err=True)
        sys.exit(1)


@main.command()
@click.option("--port", type=int, default=8722)
@click.option("--host", default="127.0.0.1")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--backend", type=click.Choice(["mock", "remote"]), default="mock")
@click.option("--proactive/--no-proactive", default=True)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Serve a built UI from this directory at /ui.")
def serve(port, host, scene_path, backend, proactive, config_file, endpoint, model, static_dir):
    """Run the HTTP + event-stream service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    app = create_app(ServiceConfig(
        scene_path=scene_path,
        backend=_backend_config(backend, config_file, endpoint, model),
        proactive=proactive,
        static_dir=static_dir,
    ))
    uvicorn.run(app, host=host, port=port, log_level="warning")


def run():
    try:
        main(standalone_mode=True)
    except ProvoxError as err:
        click.echo(f"{err.code}: {err.message}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()

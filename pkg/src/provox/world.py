"""Deterministic tabletop world: object poses, gripper, containers, clock.

Stands in for the physical arm and perception stack. Primitive semantics
work off object centroids: ``goto`` hovers above a target, ``pickup``
grasps a free object, ``release`` drops into a container when the gripper
is above one. Faults are returned as events that abort the remainder of a
plan rather than raised.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dsl import API, BASE_PRIMITIVES, Call, ObjectRef, Plan, inline_plan
from .errors import InvalidSceneError

Vec3 = tuple[float, float, float]

HOME_POSE: Vec3 = (0.0, 0.0, 0.4)


@dataclass(frozen=True)
class SimConstants:
    """Kinematic constants; overridable per scene file."""

    hover_offset: float = 0.15   # m above an object for goto
    travel_speed: float = 0.25   # m/s
    drop_radius: float = 0.10    # horizontal m for container capture
    grasp_duration: float = 2.0  # added to the approach for pickup
    gripper_duration: float = 1.0


@dataclass(frozen=True)
class SceneSpec:
    objects: tuple[ObjectRef, ...]
    workspace_min: Vec3 = (-1.0, -1.0, 0.0)
    workspace_max: Vec3 = (1.0, 1.0, 1.0)
    constants: SimConstants = field(default_factory=SimConstants)

    def __post_init__(self):
        seen = set()
        for o in self.objects:
            if o.id in seen:
                raise InvalidSceneError(f"duplicate object id {o.id}")
            seen.add(o.id)
            for lo, hi, x in zip(self.workspace_min, self.workspace_max, o.position):
                if not lo <= x <= hi:
                    raise InvalidSceneError(f"{o.id} position {o.position} outside workspace")

    @property
    def containers(self) -> tuple[str, ...]:
        return tuple(o.id for o in self.objects if o.is_container)

    def object(self, object_id: str) -> ObjectRef:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise InvalidSceneError(f"no object {object_id} in scene")


def load_scene_file(path: str | Path) -> SceneSpec:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return scene_from_obj(data)


def scene_from_obj(data: dict) -> SceneSpec:
    try:
        objects = tuple(
            ObjectRef(
                id=o["id"],
                display_name=o["display_name"],
                aliases=tuple(o["aliases"]),
                is_container=bool(o.get("container", False)),
                position=tuple(float(x) for x in o["position"]),
            )
            for o in data["objects"]
        )
    except (KeyError, TypeError, ValueError) as err:
        raise InvalidSceneError(f"malformed scene: {err}") from err
    ws = data.get("workspace", {})
    constants = SimConstants(**data.get("constants", {}))
    return SceneSpec(
        objects=objects,
        workspace_min=tuple(ws.get("min", (-1.0, -1.0, 0.0))),
        workspace_max=tuple(ws.get("max", (1.0, 1.0, 1.0))),
        constants=constants,
    )


@dataclass(frozen=True)
class Gripper:
    position: Vec3 = HOME_POSE
    open: bool = True
    holding: str | None = None


@dataclass(frozen=True)
class SimEvent:
    kind: str  # moved | grasped | released | gripper_opened | gripper_closed | fault
    subject: str = ""
    duration: float = 0.0
    fault_code: str = ""

    @property
    def is_fault(self) -> bool:
        return self.kind == "fault"


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot. Every object is in exactly one place: a free
    pose, inside a container, or held by the gripper."""

    scene: SceneSpec
    poses: dict[str, Vec3]
    inside: dict[str, str]
    gripper: Gripper = field(default_factory=Gripper)
    clock: float = 0.0

    def object_count(self) -> int:
        return len(self.poses) + len(self.inside) + (1 if self.gripper.holding else 0)

    def contents(self, container_id: str) -> list[str]:
        return [o for o, c in self.inside.items() if c == container_id]

    def delivered_ids(self) -> set[str]:
        return set(self.inside)

    def with_clock(self, clock: float) -> "WorldState":
        return replace(self, clock=clock)

    def state_hash(self) -> str:
        """Hash of the physical state (clock excluded) for replay checks."""
        doc = {
            "poses": {k: list(v) for k, v in sorted(self.poses.items())},
            "inside": dict(sorted(self.inside.items())),
            "gripper": {
                "position": list(self.gripper.position),
                "open": self.gripper.open,
                "holding": self.gripper.holding,
            },
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def load_scene(spec: SceneSpec) -> WorldState:
    return WorldState(
        scene=spec,
        poses={o.id: o.position for o in spec.objects},
        inside={},
    )


def _dist(a: Vec3, b: Vec3) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def _horizontal_dist(a: Vec3, b: Vec3) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _fault(code: str, subject: str = "") -> SimEvent:
    return SimEvent("fault", subject=subject, fault_code=code)


def _target_position(world: WorldState, object_id: str) -> Vec3:
    """Effective centroid: own pose, the enclosing container's pose, or the
    gripper position if held."""
    if object_id in world.poses:
        return world.poses[object_id]
    if object_id in world.inside:
        return _target_position(world, world.inside[object_id])
    return world.gripper.position


def _container_below(world: WorldState) -> str | None:
    best = None
    best_d = world.scene.constants.drop_radius
    for cid in world.scene.containers:
        if cid not in world.poses:
            continue  # held or (oddly) nested containers have no pose
        d = _horizontal_dist(world.gripper.position, world.poses[cid])
        if d < best_d:
            best, best_d = cid, d
    return best


def _move_gripper(world: WorldState, target: Vec3) -> tuple[WorldState, float]:
    c = world.scene.constants
    hover = (target[0], target[1], target[2] + c.hover_offset)
    duration = max(1.0, _dist(world.gripper.position, hover) / c.travel_speed)
    return replace(world, gripper=replace(world.gripper, position=hover)), duration


def _place_held(world: WorldState) -> WorldState:
    """Drop the held object: into the container below, else onto the table
    at the gripper's ground projection."""
    held = world.gripper.holding
    assert held is not None
    container = _container_below(world)
    if container is not None and container != held:
        inside = {**world.inside, held: container}
        return replace(world, inside=inside,
                       gripper=replace(world.gripper, open=True, holding=None))
    g = world.gripper.position
    poses = {**world.poses, held: (g[0], g[1], 0.0)}
    return replace(world, poses=poses,
                   gripper=replace(world.gripper, open=True, holding=None))


def exec_call(world: WorldState, call: Call) -> tuple[WorldState, SimEvent]:
    """Execute one base primitive. Faults leave the world unchanged except
    for the clock and are reported as events."""
    c = world.scene.constants
    name = call.function

    if name not in BASE_PRIMITIVES:
        return world, _fault("NotAPrimitive", name)

    if name == "goto":
        obj = call.args[0]
        if obj not in world.poses and obj not in world.inside and obj != world.gripper.holding:
            return world, _fault("UnknownObject", obj)
        new, duration = _move_gripper(world, _target_position(world, obj))
        event = SimEvent("moved", subject=obj, duration=duration)

    elif name == "pickup":
        obj = call.args[0]
        if world.gripper.holding is not None:
            return world, _fault("GripperFull", obj)
        if obj in world.inside:
            return world, _fault("ObjectInContainer", obj)
        if obj not in world.poses:
            return world, _fault("UnknownObject", obj)
        moved, approach = _move_gripper(world, world.poses[obj])
        poses = {k: v for k, v in moved.poses.items() if k != obj}
        new = replace(moved, poses=poses,
                      gripper=replace(moved.gripper, open=False, holding=obj))
        event = SimEvent("grasped", subject=obj, duration=approach + c.grasp_duration)

    elif name == "release":
        if world.gripper.holding is None:
            return world, _fault("NothingHeld")
        held = world.gripper.holding
        new = _place_held(world)
        event = SimEvent("released", subject=held, duration=c.gripper_duration)

    elif name == "open_gripper":
        if world.gripper.holding is not None:
            new = _place_held(world)  # opening drops whatever is held
        else:
            new = replace(world, gripper=replace(world.gripper, open=True))
        event = SimEvent("gripper_opened", duration=c.gripper_duration)

    else:  # close_gripper
        if world.gripper.open:
            new = replace(world, gripper=replace(world.gripper, open=False))
            # Grasp a free object directly beneath, if any.
            nearest, nearest_d = None, c.drop_radius
            for oid, pos in world.poses.items():
                d = _horizontal_dist(world.gripper.position, pos)
                if d < nearest_d:
                    nearest, nearest_d = oid, d
            if nearest is not None:
                poses = {k: v for k, v in new.poses.items() if k != nearest}
                new = replace(new, poses=poses,
                              gripper=replace(new.gripper, holding=nearest, open=False))
        else:
            new = world  # idempotent
        event = SimEvent("gripper_closed", duration=c.gripper_duration)

    return new.with_clock(new.clock + event.duration), event


def exec_plan(world: WorldState, plan: Plan, api: API) -> tuple[WorldState, list[SimEvent]]:
    """Inline, then fold :func:`exec_call`; stops at the first fault."""
    events: list[SimEvent] = []
    current = world
    for call in inline_plan(plan, api).calls:
        current, event = exec_call(current, call)
        events.append(event)
        if event.is_fault:
            break
    return current, events

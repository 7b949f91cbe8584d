"""Scene documents: objects with keyframed transforms, shot markers on a
timeline, and the proxy volumes that bound collision knowledge.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field

from . import geometry as geo
from .errors import (
    DanglingTargetError,
    DuplicateIdError,
    MarkerOutOfRangeError,
    SchemaError,
    UnsortedKeyframesError,
)
from .geometry import Vec3

REST_SPEED = 1e-3  # m/s; slower than this counts as "at rest"
MAX_CELLS_PER_AXIS = 512


@dataclass(frozen=True)
class Aabb:
    half_extents: Vec3

    def __post_init__(self) -> None:
        if min(self.half_extents) <= 0:
            raise SchemaError("box half extents must be positive")


@dataclass(frozen=True)
class Capsule:
    radius: float
    half_height: float

    def __post_init__(self) -> None:
        if self.radius <= 0 or self.half_height <= 0:
            raise SchemaError("capsule radius and half height must be positive")


Shape = Aabb | Capsule


@dataclass(frozen=True)
class Keyframe:
    time: float
    position: Vec3
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0


@dataclass(frozen=True)
class KeyframeTrack:
    keys: tuple[Keyframe, ...]

    def __post_init__(self) -> None:
        if not self.keys:
            raise SchemaError("keyframe track needs at least one key")
        times = [k.time for k in self.keys]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise UnsortedKeyframesError("keyframe times must be strictly increasing")


@dataclass(frozen=True)
class Transform:
    position: Vec3
    yaw: float
    pitch: float
    roll: float

    def facing(self) -> Vec3:
        """World-space forward direction (+Z at zero rotation)."""
        return geo.rotate_euler((0.0, 0.0, 1.0), self.yaw, self.pitch, self.roll)


@dataclass(frozen=True)
class SceneObject:
    id: str
    shape: Shape
    track: KeyframeTrack
    is_character: bool = False
    subject_offset: Vec3 = (0.0, 0.0, 0.0)
    is_static: bool = True


@dataclass(frozen=True)
class ShotMarker:
    id: str
    time: float
    targets: tuple[str, ...]
    dramatisation: float = 0.5
    pace: float = 0.5
    use_preferences: bool = True
    locked: bool = False

    def __post_init__(self) -> None:
        if not self.targets:
            raise SchemaError(f"marker '{self.id}' has no targets")
        for name, value in (("dramatisation", self.dramatisation), ("pace", self.pace)):
            if not 0.0 <= value <= 1.0:
                raise SchemaError(f"marker '{self.id}' {name} must be in [0, 1]")


@dataclass(frozen=True)
class ProxyVolume:
    min_corner: Vec3
    max_corner: Vec3
    cell_size: float

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise SchemaError("proxy cell size must be positive")
        for axis in range(3):
            extent = self.max_corner[axis] - self.min_corner[axis]
            if extent <= 0:
                raise SchemaError("proxy min corner must be below max corner on every axis")
            if extent / self.cell_size > MAX_CELLS_PER_AXIS + 1e-9:
                raise SchemaError(
                    f"proxy exceeds {MAX_CELLS_PER_AXIS} cells on axis {axis}"
                )

    def contains(self, point: Vec3) -> bool:
        return all(
            self.min_corner[a] <= point[a] <= self.max_corner[a] for a in range(3)
        )


@dataclass(frozen=True)
class Timeline:
    duration: float
    markers: tuple[ShotMarker, ...]
    proxies: tuple[ProxyVolume, ...]

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise SchemaError("timeline duration must be positive")
        times = [m.time for m in self.markers]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise SchemaError("marker times must be strictly increasing")

    def marker_by_id(self, marker_id: str) -> ShotMarker:
        for marker in self.markers:
            if marker.id == marker_id:
                return marker
        raise KeyError(marker_id)


@dataclass(frozen=True)
class SceneDescription:
    objects: tuple[SceneObject, ...]
    by_id: dict[str, SceneObject] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "by_id", {o.id: o for o in self.objects})

    def object_by_id(self, object_id: str) -> SceneObject:
        try:
            return self.by_id[object_id]
        except KeyError:
            raise DanglingTargetError(f"unknown object id '{object_id}'") from None


def sample_transform(track: KeyframeTrack, t: float) -> Transform:
    """Linear interpolation, clamped to the first/last key outside the range."""
    keys = track.keys
    if t <= keys[0].time:
        k = keys[0]
        return Transform(k.position, k.yaw, k.pitch, k.roll)
    if t >= keys[-1].time:
        k = keys[-1]
        return Transform(k.position, k.yaw, k.pitch, k.roll)
    hi = bisect_right([k.time for k in keys], t)
    a, b = keys[hi - 1], keys[hi]
    u = (t - a.time) / (b.time - a.time)
    return Transform(
        position=geo.lerp(a.position, b.position, u),
        yaw=a.yaw + (b.yaw - a.yaw) * u,
        pitch=a.pitch + (b.pitch - a.pitch) * u,
        roll=a.roll + (b.roll - a.roll) * u,
    )


def object_subject_point(obj: SceneObject, t: float) -> Vec3:
    tf = sample_transform(obj.track, t)
    offset = geo.rotate_euler(obj.subject_offset, tf.yaw, tf.pitch, tf.roll)
    return geo.add(tf.position, offset)


def subject_point(scene: SceneDescription, target_ids: list[str] | tuple[str, ...], t: float) -> Vec3:
    """Focus point for a target set: one subject's offset point, or the
    centroid of several (the multi-subject triangle rule).
    """
    if not target_ids:
        raise DanglingTargetError("empty target list")
    points = [object_subject_point(scene.object_by_id(i), t) for i in target_ids]
    acc = (0.0, 0.0, 0.0)
    for p in points:
        acc = geo.add(acc, p)
    return geo.scale(acc, 1.0 / len(points))


def stop_times(track: KeyframeTrack) -> list[float]:
    """Times where the track's positional speed drops to rest.

    Speed is constant on each linear segment, so transitions can only occur
    at keyframes; the track is considered at rest after its last key.
    """
    keys = track.keys
    if len(keys) < 2:
        return []
    speeds = []
    for a, b in zip(keys, keys[1:]):
        speeds.append(geo.dist(a.position, b.position) / (b.time - a.time))
    stops = []
    for i in range(1, len(speeds)):
        if speeds[i - 1] > REST_SPEED and speeds[i] <= REST_SPEED:
            stops.append(keys[i].time)
    if speeds[-1] > REST_SPEED:
        stops.append(keys[-1].time)
    return stops


# --- JSON parsing -----------------------------------------------------------


def _vec3(value, context: str) -> Vec3:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise SchemaError(f"{context} must be a 3-number array")
    return (float(value[0]), float(value[1]), float(value[2]))


def _number(doc: dict, key: str, context: str, default=None) -> float:
    if key not in doc:
        if default is not None:
            return default
        raise SchemaError(f"{context} is missing '{key}'")
    value = doc[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SchemaError(f"{context}.{key} must be a number")
    return float(value)


def _shape_from_dict(doc, context: str) -> Shape:
    if not isinstance(doc, dict) or "type" not in doc:
        raise SchemaError(f"{context}.shape must be an object with a 'type'")
    kind = doc["type"]
    if kind == "box":
        return Aabb(half_extents=_vec3(doc.get("half_extents"), f"{context}.half_extents"))
    if kind == "capsule":
        return Capsule(
            radius=_number(doc, "radius", context),
            half_height=_number(doc, "half_height", context),
        )
    raise SchemaError(f"{context}: unknown shape type '{kind}'")


def _track_from_list(doc, context: str) -> KeyframeTrack:
    if not isinstance(doc, list) or not doc:
        raise SchemaError(f"{context}.keys must be a non-empty array")
    keys = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            raise SchemaError(f"{context}.keys[{i}] must be an object")
        keys.append(
            Keyframe(
                time=_number(item, "time", f"{context}.keys[{i}]"),
                position=_vec3(item.get("position"), f"{context}.keys[{i}].position"),
                yaw=_number(item, "yaw", f"{context}.keys[{i}]", 0.0),
                pitch=_number(item, "pitch", f"{context}.keys[{i}]", 0.0),
                roll=_number(item, "roll", f"{context}.keys[{i}]", 0.0),
            )
        )
    return KeyframeTrack(keys=tuple(keys))


def parse_scene(data: bytes | str) -> tuple[SceneDescription, Timeline]:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("scene document must be an object")
    for key in ("duration", "objects", "markers", "proxies"):
        if key not in doc:
            raise SchemaError(f"scene document is missing '{key}'")

    duration = _number(doc, "duration", "scene")

    objects = []
    seen_ids: set[str] = set()
    if not isinstance(doc["objects"], list):
        raise SchemaError("'objects' must be an array")
    for i, odoc in enumerate(doc["objects"]):
        context = f"objects[{i}]"
        if not isinstance(odoc, dict) or "id" not in odoc:
            raise SchemaError(f"{context} must be an object with an 'id'")
        oid = str(odoc["id"])
        if oid in seen_ids:
            raise DuplicateIdError(f"duplicate object id '{oid}'")
        seen_ids.add(oid)
        objects.append(
            SceneObject(
                id=oid,
                shape=_shape_from_dict(odoc.get("shape"), context),
                track=_track_from_list(odoc.get("keys"), context),
                is_character=bool(odoc.get("is_character", False)),
                subject_offset=_vec3(
                    odoc.get("subject_offset", [0, 0, 0]), f"{context}.subject_offset"
                ),
                is_static=bool(odoc.get("is_static", True)),
            )
        )
    scene = SceneDescription(objects=tuple(objects))

    markers = []
    seen_marker_ids: set[str] = set()
    if not isinstance(doc["markers"], list):
        raise SchemaError("'markers' must be an array")
    for i, mdoc in enumerate(doc["markers"]):
        context = f"markers[{i}]"
        if not isinstance(mdoc, dict) or "id" not in mdoc:
            raise SchemaError(f"{context} must be an object with an 'id'")
        mid = str(mdoc["id"])
        if mid in seen_marker_ids:
            raise DuplicateIdError(f"duplicate marker id '{mid}'")
        seen_marker_ids.add(mid)
        time = _number(mdoc, "time", context)
        if not 0.0 <= time <= duration:
            raise MarkerOutOfRangeError(
                f"marker '{mid}' at t={time} outside [0, {duration}]"
            )
        targets = mdoc.get("targets")
        if not isinstance(targets, list) or not targets:
            raise SchemaError(f"{context}.targets must be a non-empty array")
        for target in targets:
            if target not in seen_ids:
                raise DanglingTargetError(
                    f"marker '{mid}' targets unknown object '{target}'"
                )
        markers.append(
            ShotMarker(
                id=mid,
                time=time,
                targets=tuple(str(t) for t in targets),
                dramatisation=_number(mdoc, "dramatisation", context, 0.5),
                pace=_number(mdoc, "pace", context, 0.5),
                use_preferences=bool(mdoc.get("use_preferences", True)),
                locked=bool(mdoc.get("locked", False)),
            )
        )

    proxies = []
    if not isinstance(doc["proxies"], list) or not doc["proxies"]:
        raise SchemaError("'proxies' must be a non-empty array")
    for i, pdoc in enumerate(doc["proxies"]):
        context = f"proxies[{i}]"
        if not isinstance(pdoc, dict):
            raise SchemaError(f"{context} must be an object")
        proxies.append(
            ProxyVolume(
                min_corner=_vec3(pdoc.get("min"), f"{context}.min"),
                max_corner=_vec3(pdoc.get("max"), f"{context}.max"),
                cell_size=_number(pdoc, "cell_size", context),
            )
        )

    timeline = Timeline(duration=duration, markers=tuple(markers), proxies=tuple(proxies))
    return scene, timeline


def scene_to_dict(scene: SceneDescription, timeline: Timeline) -> dict:
    """Re-serialize a parsed scene (round-trip aid; field order is stable)."""
    objects = []
    for obj in scene.objects:
        if isinstance(obj.shape, Aabb):
            shape = {"type": "box", "half_extents": list(obj.shape.half_extents)}
        else:
            shape = {
                "type": "capsule",
                "radius": obj.shape.radius,
                "half_height": obj.shape.half_height,
            }
        objects.append(
            {
                "id": obj.id,
                "shape": shape,
                "is_character": obj.is_character,
                "subject_offset": list(obj.subject_offset),
                "is_static": obj.is_static,
                "keys": [
                    {
                        "time": k.time,
                        "position": list(k.position),
                        "yaw": k.yaw,
                        "pitch": k.pitch,
                        "roll": k.roll,
                    }
                    for k in obj.track.keys
                ],
            }
        )
    return {
        "duration": timeline.duration,
        "objects": objects,
        "markers": [
            {
                "id": m.id,
                "time": m.time,
                "targets": list(m.targets),
                "dramatisation": m.dramatisation,
                "pace": m.pace,
                "use_preferences": m.use_preferences,
                "locked": m.locked,
            }
            for m in timeline.markers
        ],
        "proxies": [
            {
                "min": list(p.min_corner),
                "max": list(p.max_corner),
                "cell_size": p.cell_size,
            }
            for p in timeline.proxies
        ],
    }


def world_segment(obj: SceneObject, t: float) -> tuple[Vec3, Vec3]:
    """World-space core segment of a capsule object at time t."""
    if not isinstance(obj.shape, Capsule):
        raise ValueError("world_segment is only defined for capsules")
    tf = sample_transform(obj.track, t)
    axis = geo.rotate_euler((0.0, obj.shape.half_height, 0.0), tf.yaw, tf.pitch, tf.roll)
    return geo.sub(tf.position, axis), geo.add(tf.position, axis)


def bounding_radius(scene: SceneDescription, t: float, center: Vec3) -> float:
    """Radius of a sphere at `center` covering every object shape at time t."""
    radius = 0.0
    for obj in scene.objects:
        tf = sample_transform(obj.track, t)
        if isinstance(obj.shape, Aabb):
            corner = math.sqrt(sum(h * h for h in obj.shape.half_extents))
            radius = max(radius, geo.dist(center, tf.position) + corner)
        else:
            a, b = world_segment(obj, t)
            reach = max(geo.dist(center, a), geo.dist(center, b)) + obj.shape.radius
            radius = max(radius, reach)
    return radius

"""Builders shared across the test suite."""
from __future__ import annotations

import json

from directorscut.dataset import ClipAnnotation, DirectorProfile
from directorscut.scene import (
    Aabb,
    Capsule,
    Keyframe,
    KeyframeTrack,
    ProxyVolume,
    SceneDescription,
    SceneObject,
    ShotMarker,
    Timeline,
)
from directorscut.techniques import ANNOTATED, Technique


def make_clip(counts: dict[Technique, int] | None = None, d: float = 0.5, p: float = 0.5,
              source: str = "test") -> ClipAnnotation:
    full = {t: 0 for t in ANNOTATED}
    if counts:
        full.update(counts)
    return ClipAnnotation(counts=full, dramatisation=d, pace=p, source_tag=source)


def make_profile(clips, name: str = "tester") -> DirectorProfile:
    return DirectorProfile(director_name=name, clips=list(clips))


def profile_json(clips) -> bytes:
    doc = {
        "director": "tester",
        "clips": [
            {
                "counts": {t.json_key: c.counts[t] for t in ANNOTATED},
                "dramatisation": c.dramatisation,
                "pace": c.pace,
                "source": c.source_tag,
            }
            for c in clips
        ],
    }
    return json.dumps(doc).encode()


def static_track(position=(0.0, 0.0, 0.0), yaw: float = 0.0) -> KeyframeTrack:
    return KeyframeTrack(keys=(Keyframe(time=0.0, position=tuple(position), yaw=yaw),))


def line_track(p0, p1, t0: float = 0.0, t1: float = 1.0) -> KeyframeTrack:
    return KeyframeTrack(
        keys=(Keyframe(time=t0, position=tuple(p0)), Keyframe(time=t1, position=tuple(p1)))
    )


def box_object(oid: str, center, half_extents, **kwargs) -> SceneObject:
    return SceneObject(
        id=oid, shape=Aabb(half_extents=tuple(half_extents)),
        track=static_track(center), **kwargs
    )


def character(oid: str, track: KeyframeTrack, radius: float = 0.3, half_height: float = 0.6,
              head=(0.0, 1.5, 0.0)) -> SceneObject:
    return SceneObject(
        id=oid,
        shape=Capsule(radius=radius, half_height=half_height),
        track=track,
        is_character=True,
        subject_offset=tuple(head),
        is_static=False,
    )


def open_field_scene(extent: float = 20.0, cell: float = 0.5):
    """One character standing alone inside a large proxy volume."""
    hero = character("hero", static_track((0.0, 0.9, 0.0)))
    scene = SceneDescription(objects=(hero,))
    marker = ShotMarker(id="m1", time=0.5, targets=("hero",))
    timeline = Timeline(
        duration=4.0,
        markers=(marker,),
        proxies=(
            ProxyVolume(
                min_corner=(-extent, 0.0, -extent),
                max_corner=(extent, 8.0, extent),
                cell_size=cell,
            ),
        ),
    )
    return scene, timeline

"""Wireframe SVG previews of a planned shot.

Pure function of (plan, scene, size): object edges are projected through the
plan's pinhole camera, clipped at a near plane, and drawn over a thirds grid
with the subject point marked. Output bytes are stable for identical inputs.
"""
from __future__ import annotations

import math

from . import geometry as geo
from .geometry import Vec3
from .placement import CameraPose, ShotPlan
from .scene import Aabb, Capsule, SceneDescription, sample_transform, world_segment

NEAR_PLANE = 0.05
_RING_SEGMENTS = 12


def _box_edges(center: Vec3, half: Vec3) -> list[tuple[Vec3, Vec3]]:
    xs = (center[0] - half[0], center[0] + half[0])
    ys = (center[1] - half[1], center[1] + half[1])
    zs = (center[2] - half[2], center[2] + half[2])
    corners = {
        (i, j, k): (xs[i], ys[j], zs[k]) for i in (0, 1) for j in (0, 1) for k in (0, 1)
    }
    edges = []
    for a, b in (
        ((0, 0, 0), (1, 0, 0)), ((0, 1, 0), (1, 1, 0)), ((0, 0, 1), (1, 0, 1)), ((0, 1, 1), (1, 1, 1)),
        ((0, 0, 0), (0, 1, 0)), ((1, 0, 0), (1, 1, 0)), ((0, 0, 1), (0, 1, 1)), ((1, 0, 1), (1, 1, 1)),
        ((0, 0, 0), (0, 0, 1)), ((1, 0, 0), (1, 0, 1)), ((0, 1, 0), (0, 1, 1)), ((1, 1, 0), (1, 1, 1)),
    ):
        edges.append((corners[a], corners[b]))
    return edges


def _capsule_edges(seg_a: Vec3, seg_b: Vec3, radius: float) -> list[tuple[Vec3, Vec3]]:
    axis = geo.sub(seg_b, seg_a)
    length = geo.norm(axis)
    if length < 1e-12:
        axis_hat = (0.0, 1.0, 0.0)
    else:
        axis_hat = geo.scale(axis, 1.0 / length)
    ref = (1.0, 0.0, 0.0) if abs(axis_hat[0]) < 0.9 else (0.0, 0.0, 1.0)
    u = geo.normalize(geo.cross(axis_hat, ref))
    v = geo.cross(axis_hat, u)
    edges = []
    rings = []
    for center in (seg_a, seg_b):
        ring = []
        for i in range(_RING_SEGMENTS):
            ang = 2.0 * math.pi * i / _RING_SEGMENTS
            offset = geo.add(
                geo.scale(u, radius * math.cos(ang)), geo.scale(v, radius * math.sin(ang))
            )
            ring.append(geo.add(center, offset))
        rings.append(ring)
        for i in range(_RING_SEGMENTS):
            edges.append((ring[i], ring[(i + 1) % _RING_SEGMENTS]))
    for i in range(0, _RING_SEGMENTS, _RING_SEGMENTS // 4):
        edges.append((rings[0][i], rings[1][i]))
    return edges


def _to_camera(pose: CameraPose, point: Vec3) -> Vec3:
    f, r, u = geo.camera_basis(pose.look_dir, pose.up)
    v = geo.sub(point, pose.position)
    return (geo.dot(v, r), geo.dot(v, u), geo.dot(v, f))


def _project(pose: CameraPose, cam: Vec3, width: int, height: int) -> tuple[float, float]:
    half_h = math.tan(pose.fov / 2.0)
    x = cam[0] / (2.0 * cam[2] * half_h * pose.aspect)
    y = cam[1] / (2.0 * cam[2] * half_h)
    return (0.5 + x) * width, (0.5 - y) * height


def _clip_near(a: Vec3, b: Vec3) -> tuple[Vec3, Vec3] | None:
    za, zb = a[2], b[2]
    if za < NEAR_PLANE and zb < NEAR_PLANE:
        return None
    if za >= NEAR_PLANE and zb >= NEAR_PLANE:
        return a, b
    t = (NEAR_PLANE - za) / (zb - za)
    mid = geo.lerp(a, b, t)
    return (mid, b) if za < NEAR_PLANE else (a, mid)


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def render_preview(
    plan: ShotPlan, scene: SceneDescription, width: int = 320, height: int = 180
) -> str:
    pose = plan.pose
    marker_time = plan_time(plan)
    lines: list[str] = []
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    lines.append(f'<rect class="bg" width="{width}" height="{height}" fill="#1b2026"/>')

    def emit_edge(a: Vec3, b: Vec3) -> None:
        clipped = _clip_near(_to_camera(pose, a), _to_camera(pose, b))
        if clipped is None:
            return
        (x1, y1), (x2, y2) = (
            _project(pose, clipped[0], width, height),
            _project(pose, clipped[1], width, height),
        )
        lines.append(
            f'<line class="edge" x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
            f'x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="#9ecbff" stroke-width="1"/>'
        )

    for obj in scene.objects:
        tf = sample_transform(obj.track, marker_time)
        if isinstance(obj.shape, Aabb):
            for a, b in _box_edges(tf.position, obj.shape.half_extents):
                emit_edge(a, b)
        elif isinstance(obj.shape, Capsule):
            seg_a, seg_b = world_segment(obj, marker_time)
            for a, b in _capsule_edges(seg_a, seg_b, obj.shape.radius):
                emit_edge(a, b)

    for frac in (1.0 / 3.0, 2.0 / 3.0):
        x = frac * width
        y = frac * height
        lines.append(
            f'<line class="thirds" x1="{_fmt(x)}" y1="0" x2="{_fmt(x)}" y2="{height}" '
            f'stroke="#39434d" stroke-width="0.5"/>'
        )
        lines.append(
            f'<line class="thirds" x1="0" y1="{_fmt(y)}" x2="{width}" y2="{_fmt(y)}" '
            f'stroke="#39434d" stroke-width="0.5"/>'
        )

    cam = _to_camera(pose, plan.focus_point)
    if cam[2] >= NEAR_PLANE:
        sx, sy = _project(pose, cam, width, height)
        lines.append(
            f'<circle class="subject" cx="{_fmt(sx)}" cy="{_fmt(sy)}" r="3" '
            f'fill="none" stroke="#ffcc66" stroke-width="1.2"/>'
        )

    lines.append(
        f'<rect class="frame" x="0.5" y="0.5" width="{width - 1}" height="{height - 1}" '
        f'fill="none" stroke="#5d6770" stroke-width="1"/>'
    )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


_PLAN_TIME_KEY = "marker_time"


def plan_time(plan: ShotPlan) -> float:
    """Scene time a plan was simulated at (carried in its settings)."""
    return plan.settings.get(_PLAN_TIME_KEY, 0.0)

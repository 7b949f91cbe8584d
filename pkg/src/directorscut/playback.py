"""Storyboard playback: expands per-marker plans into a per-frame camera
track, running the look / tracking / FX techniques between cuts and
resolving runtime collisions by sliding along voxel surfaces.

Smoothing and zoom progressions run in wall time; slow motion only rescales
how fast scene time advances underneath them.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from . import geometry as geo
from . import jsonutil
from .errors import SchemaError
from .geometry import Vec3
from .placement import CAMERA_BODY_RADIUS
from .preview import plan_time
from .proxy import OccupancyGrid, sphere_blocked
from .scene import (
    REST_SPEED,
    SceneDescription,
    SceneObject,
    Timeline,
    subject_point,
)
from .storyboard import Storyboard
from .techniques import Category, Technique

_NOISE_WEIGHTS = (0.55, 0.30, 0.15)
_NOISE_RATIOS = (1.0, 1.6180339887, 2.2360679775)
_LEAD_RAMP = 0.5  # seconds of gain ease-down ahead of a freeze window
_PUSHOUT_CELLS = 8


@dataclass(frozen=True)
class PlaybackConfig:
    fps: float = 30.0
    slow_mo_factor: float = 0.4
    handheld_amplitude: float = 0.02
    handheld_frequency: float = 2.5
    steadycam_smoothing_time: float = 0.5
    quick_zoom_duration: float = 0.25
    dolly_zoom_travel: float = 2.0
    lead_time: float = 0.3
    zoom_narrow_factor: float = 0.55

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if not 0.0 < self.slow_mo_factor <= 1.0:
            raise ValueError("slow_mo_factor must be in (0, 1]")


@dataclass(frozen=True)
class CameraFrame:
    wall_time: float
    scene_time: float
    position: Vec3
    look_dir: Vec3
    up: Vec3
    fov: float
    time_scale: float


@dataclass(frozen=True)
class CameraTrack:
    frames: tuple[CameraFrame, ...]
    fps: float


def apply_variant(
    scene: SceneDescription, variant_tracks: dict | None
) -> SceneDescription:
    """Swap in alternate keyframe tracks (dynamic-cutscene support). The
    design-time grids are intentionally left alone; runtime collision
    resolution covers what they no longer know.
    """
    if not variant_tracks:
        return scene
    objects = []
    for obj in scene.objects:
        track = variant_tracks.get(obj.id)
        objects.append(replace(obj, track=track) if track is not None else obj)
    return SceneDescription(objects=tuple(objects))


# --- collision resolution ---------------------------------------------------

_AXIS_DIRS: tuple[Vec3, ...] = (
    (1.0, 0.0, 0.0),
    (-1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, -1.0, 0.0),
    (0.0, 0.0, 1.0),
    (0.0, 0.0, -1.0),
)


def _min_pushout(grid: OccupancyGrid, position: Vec3, radius: float) -> Vec3 | None:
    """Smallest axis-aligned translation that clears the camera sphere, or
    None when nothing within the search range is free.
    """
    best: tuple[float, Vec3] | None = None
    max_dist = _PUSHOUT_CELLS * grid.cell_size
    coarse = grid.cell_size / 4.0
    for direction in _AXIS_DIRS:
        lo = 0.0
        hi = None
        steps = int(max_dist / coarse) + 1
        for i in range(1, steps + 1):
            d = i * coarse
            if not sphere_blocked(grid, geo.add(position, geo.scale(direction, d)), radius):
                hi = d
                lo = d - coarse
                break
        if hi is None:
            continue
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            if sphere_blocked(grid, geo.add(position, geo.scale(direction, mid)), radius):
                lo = mid
            else:
                hi = mid
        if best is None or hi < best[0]:
            best = (hi, direction)
    if best is None:
        return None
    return geo.scale(best[1], best[0])


def resolve_position(
    grid: OccupancyGrid | None, position: Vec3, previous_valid: Vec3
) -> Vec3:
    """Push a penetrating camera out along the cheapest axis; tangential
    motion survives across frames, which is what produces the slide. A
    trapped camera holds its last valid position.
    """
    if grid is None or not sphere_blocked(grid, position, CAMERA_BODY_RADIUS):
        return position
    pushout = _min_pushout(grid, position, CAMERA_BODY_RADIUS)
    if pushout is None:
        return previous_valid
    return geo.add(position, pushout)


def resolve_collision(
    frame: CameraFrame, grid: OccupancyGrid, previous_valid: Vec3 | None = None
) -> CameraFrame:
    """Frame-level wrapper: re-aims at the original look target direction
    after any push-out (orientation gets recomputed by the caller when the
    subject is known).
    """
    resolved = resolve_position(grid, frame.position, previous_valid or frame.position)
    if resolved == frame.position:
        return frame
    return replace(frame, position=resolved)


# --- leading subjects -------------------------------------------------------


def subject_rest_windows(
    scene: SceneDescription,
    targets: tuple[str, ...],
    t_start: float,
    t_end: float,
) -> list[tuple[float, float]]:
    """Scene-time intervals where the subject point is at rest, each entered
    from motion inside (t_start, t_end]. The subject path is evaluated at
    the union of the target tracks' key times (piecewise-linear between).
    """
    times = {t_start, t_end}
    for target_id in targets:
        obj = scene.by_id[target_id]
        for key in obj.track.keys:
            if t_start < key.time < t_end:
                times.add(key.time)
    ordered = sorted(times)
    if len(ordered) < 2:
        return []
    points = [subject_point(scene, targets, t) for t in ordered]
    speeds = [
        geo.dist(points[i + 1], points[i]) / (ordered[i + 1] - ordered[i])
        for i in range(len(ordered) - 1)
    ]
    windows: list[tuple[float, float]] = []
    i = 0
    moving_before = False
    while i < len(speeds):
        if speeds[i] <= REST_SPEED:
            j = i
            while j < len(speeds) and speeds[j] <= REST_SPEED:
                j += 1
            if moving_before:
                windows.append((ordered[i], ordered[j]))
            i = j
        else:
            moving_before = True
            i += 1
    return windows


def leading_gain(wall: float, freeze_windows: list[tuple[float, float]]) -> float:
    """Follow gain in [0,1]: zero inside a freeze window, cubic ease-down
    across the ramp ahead of it, one elsewhere.
    """
    gain = 1.0
    for start, end in freeze_windows:
        if start <= wall <= end:
            return 0.0
        ramp_start = start - _LEAD_RAMP
        if ramp_start <= wall < start:
            u = (wall - ramp_start) / _LEAD_RAMP
            eased = 1.0 - u * u * (3.0 - 2.0 * u)
            gain = min(gain, eased)
    return gain


def apply_leading(
    frames: list[CameraFrame],
    stop_wall_times: list[float],
    lead_time: float,
    fps: float,
) -> list[CameraFrame]:
    """Standalone form of the leading-subjects rule for an already-generated
    segment: positions freeze from (stop - lead_time) through the stop, and
    later motion replays its original per-frame deltas from the held point.
    """
    if not frames or not stop_wall_times:
        return list(frames)
    windows = [(s - lead_time - 1.0 / fps, s) for s in stop_wall_times]

    def frozen(wall: float) -> bool:
        return any(a <= wall <= b for a, b in windows)

    if not any(frozen(f.wall_time) for f in frames):
        return list(frames)
    out = [frames[0]]
    for prev, cur in zip(frames, frames[1:]):
        if frozen(cur.wall_time):
            position = out[-1].position
        else:
            delta = geo.sub(cur.position, prev.position)
            position = geo.add(out[-1].position, delta)
        out.append(replace(cur, position=position))
    return out


# --- handheld noise ---------------------------------------------------------


def _noise_phases(seed: int) -> list[tuple[float, float, float]]:
    rng = random.Random(seed ^ 0x5EED)
    return [
        (rng.random() * 2 * math.pi, rng.random() * 2 * math.pi, rng.random() * 2 * math.pi)
        for _ in range(3)
    ]


def _handheld_offset(
    u: float, amplitude: float, frequency: float, phases: list[tuple[float, float, float]]
) -> Vec3:
    out = [0.0, 0.0, 0.0]
    for weight, ratio, phase in zip(_NOISE_WEIGHTS, _NOISE_RATIOS, phases):
        w = 2.0 * math.pi * frequency * ratio
        for axis in range(3):
            out[axis] += weight * math.sin(w * u + phase[axis])
    return (out[0] * amplitude, out[1] * amplitude, out[2] * amplitude)


# --- the track generator ----------------------------------------------------


def _spring_step(
    position: Vec3, velocity: Vec3, target: Vec3, omega: float, dt: float
) -> tuple[Vec3, Vec3]:
    """Critically damped spring toward a (frame-constant) target."""
    decay = math.exp(-omega * dt)
    disp = geo.sub(position, target)
    temp = geo.add(velocity, geo.scale(disp, omega))
    new_pos = geo.add(target, geo.scale(geo.add(disp, geo.scale(temp, dt)), decay))
    new_vel = geo.scale(geo.sub(velocity, geo.scale(temp, omega * dt)), decay)
    return new_pos, new_vel


class _Segment:
    """Per-marker playback state, stepped frame by frame in wall time."""

    def __init__(
        self,
        node,
        marker,
        scene: SceneDescription,
        grid: OccupancyGrid | None,
        config: PlaybackConfig,
        wall_start: float,
        wall_end: float,
        t_start: float,
        t_end: float,
    ) -> None:
        plan = node.plan
        self.plan = plan
        self.marker = marker
        self.scene = scene
        self.grid = grid
        self.config = config
        self.wall_start = wall_start
        self.wall_end = wall_end
        self.t_start = t_start
        self.t_end = t_end
        self.time_scale = (
            config.slow_mo_factor
            if plan.techniques.get(Category.FX) == Technique.SLOW_MOTION
            else 1.0
        )
        self.tracking = plan.techniques.get(Category.TRACKING, Technique.NO_TRACKING)
        self.look = plan.techniques.get(Category.LOOK, Technique.STATIONARY_SHOT)

        self.position = plan.pose.position
        self.velocity: Vec3 = (0.0, 0.0, 0.0)
        subject0 = subject_point(scene, marker.targets, t_start)
        self.offset0 = geo.sub(plan.pose.position, subject0)
        self.fov0 = plan.pose.fov
        d0 = geo.dist(plan.pose.position, subject0)
        self.dolly_k = d0 * math.tan(self.fov0 / 2.0)
        if d0 > 1e-9:
            self.dolly_axis = geo.scale(geo.sub(plan.pose.position, subject0), 1.0 / d0)
        else:
            self.dolly_axis = (0.0, 0.0, 1.0)
        self.phases = _noise_phases(node.simulation_seed)
        self.prev_valid = plan.pose.position
        self.last_wall: float | None = None

        self.freeze_windows: list[tuple[float, float]] = []
        if self.tracking in (Technique.STEADYCAM_TRACKING, Technique.HANDHELD_TRACKING):
            pad = 1.0 / config.fps
            for rest_a, rest_b in subject_rest_windows(
                scene, marker.targets, t_start, t_end
            ):
                freeze_a = self._wall_of(rest_a) - config.lead_time - pad
                freeze_b = self._wall_of(min(rest_b, t_end)) if rest_b != math.inf else wall_end
                self.freeze_windows.append((max(freeze_a, wall_start), freeze_b))

    def _wall_of(self, scene_t: float) -> float:
        return self.wall_start + (scene_t - self.t_start) / self.time_scale

    def scene_time(self, wall: float) -> float:
        return self.t_start + (wall - self.wall_start) * self.time_scale

    def _fov_at(self, wall: float, distance: float) -> float:
        length = max(self.wall_end - self.wall_start, 1e-9)
        progress = min(max((wall - self.wall_start) / length, 0.0), 1.0)
        narrow = self.config.zoom_narrow_factor
        if self.look == Technique.CLOSE_UP_ZOOM:
            return self.fov0 * (1.0 - (1.0 - narrow) * progress)
        if self.look == Technique.QUICK_ZOOM:
            quick = min((wall - self.wall_start) / self.config.quick_zoom_duration, 1.0)
            return self.fov0 * (1.0 - (1.0 - narrow) * quick)
        if self.look == Technique.DOLLY_ZOOM:
            return 2.0 * math.atan(self.dolly_k / max(distance, 1e-6))
        return self.fov0

    def frame_at(self, wall: float) -> CameraFrame:
        scene_t = self.scene_time(wall)
        subject = subject_point(self.scene, self.marker.targets, scene_t)
        dt = 0.0 if self.last_wall is None else wall - self.last_wall
        self.last_wall = wall
        gain = leading_gain(wall, self.freeze_windows)

        if self.look == Technique.DOLLY_ZOOM:
            length = max(self.wall_end - self.wall_start, 1e-9)
            progress = min(max((wall - self.wall_start) / length, 0.0), 1.0)
            travel = self.config.dolly_zoom_travel * progress
            base = geo.add(self.plan.pose.position, geo.scale(self.dolly_axis, travel))
        elif self.tracking in (Technique.STEADYCAM_TRACKING, Technique.HANDHELD_TRACKING):
            target = geo.add(subject, self.offset0)
            if dt > 0.0 and gain > 0.0:
                omega = 2.0 / max(self.config.steadycam_smoothing_time, 1e-6)
                new_pos, new_vel = _spring_step(
                    self.position, self.velocity, target, omega, dt
                )
                if gain >= 1.0:
                    self.position, self.velocity = new_pos, new_vel
                else:
                    self.position = geo.lerp(self.position, new_pos, gain)
                    self.velocity = geo.scale(new_vel, gain)
            elif gain <= 0.0:
                self.velocity = (0.0, 0.0, 0.0)
            base = self.position
            if self.tracking == Technique.HANDHELD_TRACKING:
                base = geo.add(
                    base,
                    geo.scale(
                        _handheld_offset(
                            wall - self.wall_start,
                            self.config.handheld_amplitude,
                            self.config.handheld_frequency,
                            self.phases,
                        ),
                        gain,
                    ),
                )
        else:
            base = self.plan.pose.position

        resolved = resolve_position(self.grid, base, self.prev_valid)
        self.prev_valid = resolved
        if (
            self.tracking in (Technique.STEADYCAM_TRACKING, Technique.HANDHELD_TRACKING)
            and self.look != Technique.DOLLY_ZOOM
            and resolved != base
        ):
            # carry the push-out into the spring state (not the noise offset)
            self.position = geo.add(self.position, geo.sub(resolved, base))

        aim = geo.sub(subject, resolved)
        if geo.norm(aim) > 1e-9:
            look_dir = geo.normalize(aim)
        else:
            look_dir = self.plan.pose.look_dir
        distance = geo.dist(resolved, subject)
        fov = self._fov_at(wall, distance)
        return CameraFrame(
            wall_time=wall,
            scene_time=scene_t,
            position=resolved,
            look_dir=look_dir,
            up=self.plan.pose.up,
            fov=fov,
            time_scale=self.time_scale,
        )


def execute(
    storyboard: Storyboard,
    scene: SceneDescription,
    timeline: Timeline,
    grids: dict[str, OccupancyGrid] | None = None,
    config: PlaybackConfig | None = None,
    variant_tracks: dict | None = None,
) -> CameraTrack:
    """Play a storyboard into frames at fixed wall-time fps.

    A cut lands on the first frame of every marker segment; in between, the
    marker's tracking / look / FX techniques run, leading-subject gain
    included. Scene time advances at slow_mo_factor through slow-motion
    segments and 1:1 elsewhere.
    """
    config = config or PlaybackConfig()
    if not storyboard.nodes:
        return CameraTrack(frames=(), fps=config.fps)
    live_scene = apply_variant(scene, variant_tracks)
    grids = grids or {}

    boundaries: list[tuple[float, float]] = []  # (scene start, scene end) per node
    for i, node in enumerate(storyboard.nodes):
        t0 = plan_time(node.plan)
        t1 = (
            plan_time(storyboard.nodes[i + 1].plan)
            if i + 1 < len(storyboard.nodes)
            else timeline.duration
        )
        boundaries.append((t0, max(t1, t0)))

    segments: list[_Segment] = []
    wall = 0.0
    for node, (t0, t1) in zip(storyboard.nodes, boundaries):
        scale = (
            config.slow_mo_factor
            if node.plan.techniques.get(Category.FX) == Technique.SLOW_MOTION
            else 1.0
        )
        wall_len = (t1 - t0) / scale
        marker = timeline.marker_by_id(node.plan.marker_id)
        segments.append(
            _Segment(
                node,
                marker,
                live_scene,
                grids.get(node.plan.marker_id),
                config,
                wall,
                wall + wall_len,
                t0,
                t1,
            )
        )
        wall += wall_len

    total_wall = wall
    frame_count = int(math.floor(total_wall * config.fps + 1e-9)) + 1
    frames: list[CameraFrame] = []
    seg_index = 0
    for i in range(frame_count):
        w = i / config.fps
        while (
            seg_index + 1 < len(segments)
            and w >= segments[seg_index + 1].wall_start - 1e-12
        ):
            seg_index += 1
        frames.append(segments[seg_index].frame_at(w))
    return CameraTrack(frames=tuple(frames), fps=config.fps)


# --- export -----------------------------------------------------------------

CSV_HEADER = "wall_time,scene_time,px,py,pz,dir_x,dir_y,dir_z,fov,time_scale"


def export_track(track: CameraTrack, fmt: str = "csv") -> bytes:
    if fmt == "csv":
        rows = [CSV_HEADER]
        for f in track.frames:
            values = (
                f.wall_time, f.scene_time,
                f.position[0], f.position[1], f.position[2],
                f.look_dir[0], f.look_dir[1], f.look_dir[2],
                f.fov, f.time_scale,
            )
            rows.append(",".join(jsonutil.format_float(v) for v in values))
        return ("\n".join(rows) + "\n").encode()
    if fmt == "json":
        doc = {
            "fps": track.fps,
            "frames": [
                {
                    "wall_time": f.wall_time,
                    "scene_time": f.scene_time,
                    "position": list(f.position),
                    "look_dir": list(f.look_dir),
                    "up": list(f.up),
                    "fov": f.fov,
                    "time_scale": f.time_scale,
                }
                for f in track.frames
            ],
        }
        return jsonutil.dump_bytes(doc)
    raise ValueError(f"unknown track format '{fmt}'")


def parse_track_json(data: bytes | str) -> CameraTrack:
    import json

    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    frames = tuple(
        CameraFrame(
            wall_time=float(f["wall_time"]),
            scene_time=float(f["scene_time"]),
            position=tuple(f["position"]),
            look_dir=tuple(f["look_dir"]),
            up=tuple(f["up"]),
            fov=float(f["fov"]),
            time_scale=float(f["time_scale"]),
        )
        for f in doc["frames"]
    )
    return CameraTrack(frames=frames, fps=float(doc["fps"]))

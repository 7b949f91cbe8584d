"""Camera placement: per-technique position bands, pose proposals, the
rule-of-thirds framing test, and collision/visibility validation.

Only the close-up's one-meter ceiling is an inherent property of the
technique; the other numeric bands are tunable defaults exposed through the
per-technique overrides in the project config.
"""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field, replace

from . import geometry as geo
from .errors import BehindCameraError, NoBandError
from .geometry import Vec3
from .proxy import OccupancyGrid, capsule_cast, inside_any_proxy, sphere_blocked
from .scene import SceneDescription, bounding_radius, sample_transform
from .techniques import Category, Technique

DEFAULT_FOV = math.radians(60.0)
DEFAULT_ASPECT = 16.0 / 9.0
FOV_MIN, FOV_MAX = 0.17, 2.6
CAMERA_BODY_RADIUS = 0.2
DEFAULT_DOLLY_TRAVEL = 2.0
FEASIBILITY_PROBES = 32
_THIRDS_EPS = 1e-9

# chest-to-crown span a close-up frames, and the height fraction it fills
CLOSE_UP_SPAN = 0.8
CLOSE_UP_FILL = 0.8


class AzimuthRule(enum.Enum):
    FREE = "free"  # anywhere around the subject
    FACING_CONE = "facing_cone"  # within +-60 deg of a lone character's facing
    LATERAL = "lateral"  # directly to either side of the subject
    OVERHEAD = "overhead"  # straight up with a small tilt


@dataclass(frozen=True)
class TechniqueBand:
    dist_lo: float
    dist_hi: float
    elev_lo: float
    elev_hi: float
    azimuth: AzimuthRule = AzimuthRule.FACING_CONE


_BANDS: dict[Technique, TechniqueBand] = {
    Technique.CLOSE_UP: TechniqueBand(0.3, 1.0, math.radians(-5), math.radians(15)),
    Technique.MEDIUM: TechniqueBand(1.0, 3.0, math.radians(-5), math.radians(20)),
    Technique.FREE: TechniqueBand(1.0, 8.0, math.radians(-10), math.radians(45)),
    Technique.LONG: TechniqueBand(15.0, 40.0, math.radians(0), math.radians(20)),
    Technique.PAN: TechniqueBand(
        1.5, 6.0, math.radians(-5), math.radians(10), AzimuthRule.LATERAL
    ),
    Technique.GODS_EYE: TechniqueBand(
        2.0, 10.0, 0.0, math.radians(10), AzimuthRule.OVERHEAD
    ),
    # master distances are derived from the scene extent at simulation time
    Technique.MASTER: TechniqueBand(
        0.0, 0.0, math.radians(10), math.radians(35), AzimuthRule.FREE
    ),
}


def master_distance(
    scene: SceneDescription, t: float, subject: Vec3, fov: float = DEFAULT_FOV
) -> float:
    """Minimal camera distance putting the whole scene in frame with margin."""
    radius = max(bounding_radius(scene, t, subject), 0.5)
    return radius / (0.9 * math.tan(fov / 2.0))


def technique_band(
    technique: Technique,
    scene: SceneDescription,
    t: float,
    subject: Vec3,
    params,
    overrides: dict | None = None,
) -> TechniqueBand | None:
    """Band for a positioning technique, clamped to the global shot-distance
    window. None when the clamp leaves no room.
    """
    if technique not in _BANDS:
        raise NoBandError(f"{technique.name} is not a positioning technique")
    band = _BANDS[technique]
    if technique == Technique.MASTER:
        d = master_distance(scene, t, subject)
        band = replace(band, dist_lo=d, dist_hi=1.3 * d)
    if overrides and technique.json_key in overrides:
        o = overrides[technique.json_key]
        band = replace(
            band,
            dist_lo=float(o.get("min_distance", band.dist_lo)),
            dist_hi=float(o.get("max_distance", band.dist_hi)),
        )
    lo = max(band.dist_lo, params.min_shot_distance)
    hi = min(band.dist_hi, params.max_shot_distance)
    if lo > hi:
        return None
    return replace(band, dist_lo=lo, dist_hi=hi)


def band_center_distance(
    technique: Technique, scene: SceneDescription, t: float, subject: Vec3, params
) -> float:
    band = technique_band(technique, scene, t, subject, params)
    if band is None:
        band = _BANDS[technique]
    return 0.5 * (band.dist_lo + band.dist_hi)


@dataclass(frozen=True)
class CameraPose:
    position: Vec3
    look_dir: Vec3
    fov: float = DEFAULT_FOV
    aspect: float = DEFAULT_ASPECT
    up: Vec3 = geo.UP

    def __post_init__(self) -> None:
        if not FOV_MIN < self.fov < FOV_MAX:
            raise ValueError(f"fov {self.fov} outside ({FOV_MIN}, {FOV_MAX})")


def look_at(position: Vec3, target: Vec3, fov: float = DEFAULT_FOV) -> CameraPose:
    return CameraPose(position=position, look_dir=geo.normalize(geo.sub(target, position)), fov=fov)


def _subject_facing_yaw(
    scene: SceneDescription, target_ids: tuple[str, ...] | None, t: float
) -> float | None:
    """Yaw of a lone character target, or None when the cone rule is moot."""
    if not target_ids or len(target_ids) != 1:
        return None
    obj = scene.by_id.get(target_ids[0])
    if obj is None or not obj.is_character:
        return None
    return sample_transform(obj.track, t).yaw


def _position_from_band(
    band: TechniqueBand, subject: Vec3, d: float, u_az: float, u_el: float, facing_yaw: float | None
) -> Vec3:
    if band.azimuth == AzimuthRule.OVERHEAD:
        tilt = band.elev_lo + u_el * (band.elev_hi - band.elev_lo)
        az = u_az * 2.0 * math.pi
        direction = (
            math.sin(tilt) * math.cos(az),
            math.cos(tilt),
            math.sin(tilt) * math.sin(az),
        )
        return geo.add(subject, geo.scale(direction, d))
    if band.azimuth == AzimuthRule.LATERAL:
        base = facing_yaw if facing_yaw is not None else 0.0
        side = math.pi / 2 if u_az < 0.5 else -math.pi / 2
        jitter = (u_az * 2 % 1.0 - 0.5) * math.radians(20)
        az = base + side + jitter
    elif band.azimuth == AzimuthRule.FACING_CONE and facing_yaw is not None:
        az = facing_yaw + (u_az - 0.5) * math.radians(120)
    else:
        az = u_az * 2.0 * math.pi
    elev = band.elev_lo + u_el * (band.elev_hi - band.elev_lo)
    direction = (
        math.cos(elev) * math.sin(az),
        math.sin(elev),
        math.cos(elev) * math.cos(az),
    )
    return geo.add(subject, geo.scale(direction, d))


def _fov_for(technique: Technique, distance: float) -> float:
    if technique == Technique.CLOSE_UP:
        # frame height = span / fill at the subject plane
        fov = 2.0 * math.atan(CLOSE_UP_SPAN / CLOSE_UP_FILL / 2.0 / distance)
        return min(max(fov, FOV_MIN + 1e-6), FOV_MAX - 1e-6)
    return DEFAULT_FOV


def propose_pose(
    technique: Technique,
    subject: Vec3,
    scene: SceneDescription,
    t: float,
    rng: random.Random,
    params,
    target_ids: tuple[str, ...] | None = None,
    overrides: dict | None = None,
) -> CameraPose:
    """Sample one candidate pose in the technique's band, aimed at the subject."""
    band = technique_band(technique, scene, t, subject, params, overrides)
    if band is None:
        band = _BANDS[technique]
    d = band.dist_lo + rng.random() * (band.dist_hi - band.dist_lo)
    u_az = rng.random()
    u_el = rng.random()
    facing = _subject_facing_yaw(scene, target_ids, t)
    position = _position_from_band(band, subject, d, u_az, u_el, facing)
    return look_at(position, subject, fov=_fov_for(technique, d))


# --- rule of thirds ---------------------------------------------------------

_THIRD_POINTS = (
    (1.0 / 6.0, 1.0 / 6.0),
    (-1.0 / 6.0, 1.0 / 6.0),
    (1.0 / 6.0, -1.0 / 6.0),
    (-1.0 / 6.0, -1.0 / 6.0),
)


def project_to_screen(pose: CameraPose, point: Vec3) -> tuple[float, float]:
    """Screen coordinates of a world point: (x, y) in [-0.5, 0.5] inside the
    frame, x aspect-corrected so distances are in frame-height units.
    """
    f, r, u = geo.camera_basis(pose.look_dir, pose.up)
    v = geo.sub(point, pose.position)
    z = geo.dot(v, f)
    if z <= 1e-12:
        raise BehindCameraError("point is behind the camera")
    half_h = math.tan(pose.fov / 2.0)
    x = geo.dot(v, r) / (2.0 * z * half_h * pose.aspect)
    y = geo.dot(v, u) / (2.0 * z * half_h)
    return x, y


def rule_of_thirds_score(pose: CameraPose, subject: Vec3) -> float:
    x, y = project_to_screen(pose, subject)
    return min(math.hypot(x - px, y - py) for px, py in _THIRD_POINTS)


def thirds_threshold(params) -> float:
    return (1.0 - params.thirds_obedience) * 0.5 + _THIRDS_EPS


def thirds_passes(pose: CameraPose, subject: Vec3, params) -> bool:
    try:
        return rule_of_thirds_score(pose, subject) <= thirds_threshold(params)
    except BehindCameraError:
        return False


def aim_at_thirds(pose: CameraPose, subject: Vec3) -> CameraPose:
    """Offset the look direction so the subject lands on the nearest third
    intersection (distance to the subject is preserved).
    """
    x0, y0 = project_to_screen(pose, subject)
    target = min(_THIRD_POINTS, key=lambda p: math.hypot(x0 - p[0], y0 - p[1]))

    d = geo.sub(subject, pose.position)
    dist = geo.norm(d)
    d_hat = geo.scale(d, 1.0 / dist)
    half_h = math.tan(pose.fov / 2.0)
    # camera-space direction that projects onto the target screen point
    cx = target[0] * 2.0 * half_h * pose.aspect
    cy = target[1] * 2.0 * half_h
    cz = 1.0
    scale = 1.0 / math.sqrt(cx * cx + cy * cy + cz * cz)
    qx, qy, qz = cx * scale, cy * scale, cz * scale

    forward = d_hat
    for _ in range(64):
        f, r, u = geo.camera_basis(forward, pose.up)
        # want d_hat == qx*r + qy*u + qz*f  =>  solve for the new forward
        residual = geo.sub(d_hat, geo.add(geo.scale(r, qx), geo.scale(u, qy)))
        new_forward = geo.normalize(geo.scale(residual, 1.0 / qz))
        if geo.dist(new_forward, forward) < 1e-15:
            forward = new_forward
            break
        forward = new_forward
    return replace(pose, look_dir=forward)


# --- validation -------------------------------------------------------------


class Verdict(enum.Enum):
    VALID = "valid"
    COLLISION = "collision"
    OCCLUDED = "occluded"
    THIRDS_FAIL = "thirds_fail"


def validate_placement(
    pose: CameraPose,
    grid: OccupancyGrid,
    subject: Vec3,
    params,
    vis_grid: OccupancyGrid | None = None,
    proxies=None,
) -> Verdict:
    """Collision first, then capsule visibility, thirds last (visibility
    outranks framing). `vis_grid` is the marker's grid without its own
    targets, so a shot never occludes itself.
    """
    if proxies is not None and not inside_any_proxy(proxies, pose.position):
        return Verdict.COLLISION
    if sphere_blocked(grid, pose.position, CAMERA_BODY_RADIUS):
        return Verdict.COLLISION
    vgrid = vis_grid if vis_grid is not None else grid
    if pose.position != subject and not capsule_cast(
        vgrid, pose.position, subject, CAMERA_BODY_RADIUS
    ):
        return Verdict.OCCLUDED
    if params.thirds_obedience > 0.0 and not thirds_passes(pose, subject, params):
        return Verdict.THIRDS_FAIL
    return Verdict.VALID


# --- feasibility probing ----------------------------------------------------


def _halton(index: int, base: int) -> float:
    result = 0.0
    f = 1.0
    i = index
    while i > 0:
        f /= base
        result += f * (i % base)
        i //= base
    return result


def probe_positions(
    technique: Technique,
    subject: Vec3,
    scene: SceneDescription,
    t: float,
    params,
    target_ids: tuple[str, ...] | None = None,
    count: int = FEASIBILITY_PROBES,
    overrides: dict | None = None,
) -> list[Vec3]:
    """Deterministic low-discrepancy sample positions across the band."""
    band = technique_band(technique, scene, t, subject, params, overrides)
    if band is None:
        return []
    facing = _subject_facing_yaw(scene, target_ids, t)
    positions = []
    for i in range(1, count + 1):
        d = band.dist_lo + _halton(i, 2) * (band.dist_hi - band.dist_lo)
        positions.append(
            _position_from_band(band, subject, d, _halton(i, 3), _halton(i, 5), facing)
        )
    return positions


def _params_fingerprint(params) -> tuple:
    return (
        params.min_shot_distance,
        params.max_shot_distance,
        params.thirds_obedience,
    )


def technique_feasible(
    technique: Technique,
    subject: Vec3,
    scene: SceneDescription,
    t: float,
    grid: OccupancyGrid,
    params,
    vis_grid: OccupancyGrid | None = None,
    proxies=None,
    target_ids: tuple[str, ...] | None = None,
    overrides: dict | None = None,
) -> bool:
    """True when some probe position is collision-free with a clear capsule
    to the subject. Results are cached on the grid (immutable per marker).
    """
    key = (
        "feas",
        technique,
        tuple(round(c, 6) for c in subject),
        _params_fingerprint(params),
    )
    cached = grid.query_cache.get(key)
    if cached is not None:
        return cached
    vgrid = vis_grid if vis_grid is not None else grid
    result = False
    for position in probe_positions(
        technique, subject, scene, t, params, target_ids, overrides=overrides
    ):
        if proxies is not None and not inside_any_proxy(proxies, position):
            continue
        if sphere_blocked(grid, position, CAMERA_BODY_RADIUS):
            continue
        if capsule_cast(vgrid, position, subject, CAMERA_BODY_RADIUS):
            result = True
            break
    grid.query_cache[key] = result
    return result


@dataclass(frozen=True)
class ShotPlan:
    """One marker's outcome: the selected techniques and a validated pose.

    A degraded plan records that no positioning technique could be validated;
    it carries the category defaults and a best-effort pose so the storyboard
    always renders something for the user to react to.
    """

    marker_id: str
    techniques: dict[Category, Technique]
    pose: CameraPose
    focus_point: Vec3
    settings: dict[str, float] = field(default_factory=dict)
    attempts: int = 0
    degraded: bool = False
    used_default: frozenset[Category] = frozenset()


def _best_effort_pose(
    subject: Vec3,
    scene: SceneDescription,
    t: float,
    grid: OccupancyGrid,
    params,
    vis_grid: OccupancyGrid | None,
    proxies,
    target_ids,
) -> CameraPose:
    """Least-occluded non-colliding probe across all bands; a raw fallback
    above the subject if literally everything collides.
    """
    from .proxy import raycast
    from .techniques import CATEGORY_MEMBERS

    vgrid = vis_grid if vis_grid is not None else grid
    best: tuple[float, Vec3] | None = None
    for technique in CATEGORY_MEMBERS[Category.POSITIONING]:
        for position in probe_positions(
            technique, subject, scene, t, params, target_ids, count=8
        ):
            if proxies is not None and not inside_any_proxy(proxies, position):
                continue
            if sphere_blocked(grid, position, CAMERA_BODY_RADIUS):
                continue
            total = geo.dist(position, subject)
            if total == 0.0:
                continue
            hit = raycast(vgrid, position, subject)
            clear_fraction = 1.0 if hit is None else hit / total
            if best is None or clear_fraction > best[0]:
                best = (clear_fraction, position)
        if best is not None and best[0] >= 1.0:
            break
    if best is not None:
        return look_at(best[1], subject)
    return look_at(geo.add(subject, (0.0, 1.0, 1.5)), subject)


def place_camera(
    selection,
    marker,
    scene: SceneDescription,
    grid: OccupancyGrid,
    model,
    stats,
    params,
    rng: random.Random,
    vis_grid: OccupancyGrid | None = None,
    proxies=None,
    previous_plan: ShotPlan | None = None,
    overrides: dict | None = None,
) -> ShotPlan:
    """Execute the selected positioning technique.

    Proposes poses until one validates; a framing-only failure is accepted
    once half the attempts are spent (visibility and collisions are never
    compromised). When a technique exhausts its attempts, selection runs
    again with that technique excluded; when every positioning technique has
    failed, a degraded plan with category defaults is emitted.
    """
    from .scene import subject_point
    from .selection import SelectionContext, select_for_marker
    from .techniques import CATEGORY_MEMBERS

    subject = subject_point(scene, marker.targets, marker.time)
    tried: set[Technique] = set()
    current = selection
    total_attempts = 0
    tolerate_after = params.selection_timeout // 2

    while True:
        technique = current.per_category[Category.POSITIONING]
        accepted: CameraPose | None = None
        for attempt in range(1, params.selection_timeout + 1):
            pose = propose_pose(
                technique, subject, scene, marker.time, rng, params,
                target_ids=marker.targets, overrides=overrides,
            )
            if params.thirds_obedience > 0.0:
                pose = aim_at_thirds(pose, subject)
            total_attempts += 1
            if (
                previous_plan is not None
                and geo.dist(pose.position, previous_plan.pose.position)
                > params.max_transition_distance
            ):
                continue
            verdict = validate_placement(pose, grid, subject, params, vis_grid, proxies)
            if verdict is Verdict.VALID:
                accepted = pose
                break
            if (
                verdict is Verdict.THIRDS_FAIL
                and params.thirds_visibility_priority
                and attempt > tolerate_after
            ):
                accepted = pose
                break
        if accepted is not None:
            band = technique_band(technique, scene, marker.time, subject, params, overrides)
            settings: dict[str, float] = {"fov": accepted.fov, "marker_time": marker.time}
            if band is not None:
                settings["distance_min"] = band.dist_lo
                settings["distance_max"] = band.dist_hi
            if current.per_category.get(Category.LOOK) == Technique.DOLLY_ZOOM:
                settings["dolly_travel"] = DEFAULT_DOLLY_TRAVEL
            return ShotPlan(
                marker_id=marker.id,
                techniques=dict(current.per_category),
                pose=accepted,
                focus_point=subject,
                settings=settings,
                attempts=total_attempts,
                used_default=current.used_default,
            )

        tried.add(technique)
        members = CATEGORY_MEMBERS[Category.POSITIONING]
        if all(t in tried for t in members):
            break
        ctx = SelectionContext(
            marker=marker,
            scene=scene,
            grid=grid,
            subject=subject,
            previous_plan=previous_plan,
            vis_grid=vis_grid,
            proxies=proxies,
            technique_overrides=overrides,
        )
        current = select_for_marker(
            ctx, model, stats, params, rng, banned_positioning=frozenset(tried)
        )
        if current.per_category[Category.POSITIONING] in tried:
            break  # selection fell back to something already exhausted

    from .techniques import CATEGORY_DEFAULTS

    return ShotPlan(
        marker_id=marker.id,
        techniques=dict(CATEGORY_DEFAULTS),
        pose=_best_effort_pose(
            subject, scene, marker.time, grid, params, vis_grid, proxies, marker.targets
        ),
        focus_point=subject,
        settings={"marker_time": marker.time},
        attempts=total_attempts,
        degraded=True,
        used_default=frozenset(CATEGORY_DEFAULTS),
    )


def dolly_zoom_feasible(
    positioning: Technique,
    subject: Vec3,
    scene: SceneDescription,
    t: float,
    grid: OccupancyGrid,
    params,
    vis_grid: OccupancyGrid | None = None,
    proxies=None,
    target_ids: tuple[str, ...] | None = None,
    travel: float = DEFAULT_DOLLY_TRAVEL,
) -> bool:
    """A dolly zoom needs a clear corridor of `travel` meters straight back
    from a workable camera position.
    """
    key = (
        "dolly",
        positioning,
        tuple(round(c, 6) for c in subject),
        _params_fingerprint(params),
        travel,
    )
    cached = grid.query_cache.get(key)
    if cached is not None:
        return cached
    vgrid = vis_grid if vis_grid is not None else grid
    result = False
    for position in probe_positions(positioning, subject, scene, t, params, target_ids):
        if proxies is not None and not inside_any_proxy(proxies, position):
            continue
        if sphere_blocked(grid, position, CAMERA_BODY_RADIUS):
            continue
        if not capsule_cast(vgrid, position, subject, CAMERA_BODY_RADIUS):
            continue
        backward = geo.normalize(geo.sub(position, subject))
        end = geo.add(position, geo.scale(backward, travel))
        if capsule_cast(grid, position, end, CAMERA_BODY_RADIUS):
            result = True
            break
    grid.query_cache[key] = result
    return result

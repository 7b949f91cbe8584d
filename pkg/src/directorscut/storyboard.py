"""Storyboards: one lockable node per marker, selective re-simulation, and
byte-stable versioned serialization.

Every node gets its own rng stream derived from (run seed, marker id), so
re-simulating any subset never perturbs the nodes that were kept, which is
what makes the lock guarantee byte-exact.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace

from . import jsonutil
from .dataset import AggregateStats, CategoryModel
from .errors import LockedTargetError, SchemaError, VersionError
from .placement import CameraPose, ShotPlan, place_camera
from .proxy import OccupancyGrid, proxy_union, voxelize
from .scene import SceneDescription, Timeline, subject_point
from .selection import RuleParams, SelectionContext, select_for_marker
from .techniques import CATEGORY_ORDER, TECHNIQUE_BY_KEY, Category, Technique

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    params: RuleParams
    scene_path: str = ""
    dataset_path: str = ""


@dataclass(frozen=True)
class StoryboardNode:
    plan: ShotPlan
    locked: bool
    preview_ref: str
    simulation_seed: int


@dataclass(frozen=True)
class Storyboard:
    nodes: tuple[StoryboardNode, ...]
    config: SimulationConfig
    stale_marker_ids: tuple[str, ...] = ()

    def node_by_marker(self, marker_id: str) -> StoryboardNode:
        for node in self.nodes:
            if node.plan.marker_id == marker_id:
                return node
        raise KeyError(marker_id)

    def marker_ids(self) -> list[str]:
        return [n.plan.marker_id for n in self.nodes]


def node_seed(run_seed: int, marker_id: str) -> int:
    digest = hashlib.sha256(f"{run_seed}:{marker_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def bake_grids(
    scene: SceneDescription, timeline: Timeline
) -> tuple[dict[str, OccupancyGrid], dict[str, OccupancyGrid]]:
    """Per-marker occupancy grids: the full grid for camera collisions and a
    targets-excluded grid for subject visibility.
    """
    volume = proxy_union(timeline.proxies)
    grids: dict[str, OccupancyGrid] = {}
    vis_grids: dict[str, OccupancyGrid] = {}
    for marker in timeline.markers:
        grids[marker.id] = voxelize(scene, volume, marker.time, marker.id)
        vis_grids[marker.id] = voxelize(
            scene, volume, marker.time, marker.id, exclude_ids=set(marker.targets)
        )
    return grids, vis_grids


def _simulate_marker(
    marker,
    scene: SceneDescription,
    timeline: Timeline,
    model: CategoryModel,
    stats: AggregateStats,
    params: RuleParams,
    seed: int,
    grids: dict[str, OccupancyGrid],
    vis_grids: dict[str, OccupancyGrid],
    previous_plan: ShotPlan | None,
    overrides: dict | None,
) -> StoryboardNode:
    marker_rng_seed = node_seed(seed, marker.id)
    rng = random.Random(marker_rng_seed)
    grid = grids[marker.id]
    vis_grid = vis_grids.get(marker.id, grid)
    ctx = SelectionContext(
        marker=marker,
        scene=scene,
        grid=grid,
        subject=subject_point(scene, marker.targets, marker.time),
        previous_plan=previous_plan,
        vis_grid=vis_grid,
        proxies=timeline.proxies,
        technique_overrides=overrides,
    )
    selection = select_for_marker(ctx, model, stats, params, rng)
    plan = place_camera(
        selection,
        marker,
        scene,
        grid,
        model,
        stats,
        params,
        rng,
        vis_grid=vis_grid,
        proxies=timeline.proxies,
        previous_plan=previous_plan,
        overrides=overrides,
    )
    return StoryboardNode(
        plan=plan,
        locked=marker.locked,
        preview_ref=f"previews/{marker.id}.svg",
        simulation_seed=marker_rng_seed,
    )


def simulate_all(
    scene: SceneDescription,
    timeline: Timeline,
    model: CategoryModel,
    stats: AggregateStats,
    params: RuleParams,
    seed: int,
    grids: dict[str, OccupancyGrid] | None = None,
    vis_grids: dict[str, OccupancyGrid] | None = None,
    scene_path: str = "",
    dataset_path: str = "",
    overrides: dict | None = None,
) -> Storyboard:
    """Simulate every marker in time order; each marker sees the previous
    marker's final plan. Deterministic per seed.
    """
    if grids is None or vis_grids is None:
        grids, vis_grids = bake_grids(scene, timeline)
    nodes: list[StoryboardNode] = []
    previous: ShotPlan | None = None
    for marker in timeline.markers:
        node = _simulate_marker(
            marker, scene, timeline, model, stats, params, seed,
            grids, vis_grids, previous, overrides,
        )
        nodes.append(node)
        previous = node.plan
    config = SimulationConfig(
        seed=seed, params=params, scene_path=scene_path, dataset_path=dataset_path
    )
    return Storyboard(nodes=tuple(nodes), config=config)


def resimulate(
    storyboard: Storyboard,
    marker_ids: set[str],
    scene: SceneDescription,
    timeline: Timeline,
    model: CategoryModel,
    stats: AggregateStats,
    params: RuleParams,
    seed: int,
    grids: dict[str, OccupancyGrid] | None = None,
    vis_grids: dict[str, OccupancyGrid] | None = None,
    overrides: dict | None = None,
) -> Storyboard:
    """Re-run the requested markers only. Untouched nodes are carried over
    object-identical (hence byte-identical when serialized); re-simulated
    nodes see their retained neighbors as history. Asking for a locked
    marker is an error, never a silent skip.
    """
    known = set(storyboard.marker_ids())
    unknown = marker_ids - known
    if unknown:
        raise KeyError(sorted(unknown)[0])
    for marker_id in sorted(marker_ids):
        if storyboard.node_by_marker(marker_id).locked:
            raise LockedTargetError(f"marker '{marker_id}' is locked")
    if not marker_ids:
        return storyboard
    if grids is None or vis_grids is None:
        grids, vis_grids = bake_grids(scene, timeline)

    nodes: list[StoryboardNode] = []
    previous: ShotPlan | None = None
    for marker in timeline.markers:
        old = storyboard.node_by_marker(marker.id)
        if marker.id in marker_ids:
            node = _simulate_marker(
                marker, scene, timeline, model, stats, params, seed,
                grids, vis_grids, previous, overrides,
            )
            node = replace(node, locked=old.locked)
        else:
            node = old
        nodes.append(node)
        previous = node.plan

    successors = {
        timeline.markers[i].id: timeline.markers[i + 1].id
        for i in range(len(timeline.markers) - 1)
    }
    stale = set(storyboard.stale_marker_ids) - marker_ids
    for marker_id in marker_ids:
        nxt = successors.get(marker_id)
        if nxt is not None and nxt not in marker_ids:
            stale.add(nxt)
    new_config = replace(storyboard.config, seed=seed, params=params)
    return Storyboard(
        nodes=tuple(nodes),
        config=new_config,
        stale_marker_ids=tuple(sorted(stale)),
    )


def set_locked(storyboard: Storyboard, marker_id: str, locked: bool) -> Storyboard:
    nodes = []
    found = False
    for node in storyboard.nodes:
        if node.plan.marker_id == marker_id:
            nodes.append(replace(node, locked=locked))
            found = True
        else:
            nodes.append(node)
    if not found:
        raise KeyError(marker_id)
    return replace(storyboard, nodes=tuple(nodes))


# --- serialization ----------------------------------------------------------


def pose_to_dict(pose: CameraPose) -> dict:
    return {
        "position": list(pose.position),
        "look_dir": list(pose.look_dir),
        "up": list(pose.up),
        "fov": pose.fov,
        "aspect": pose.aspect,
    }


def plan_to_dict(plan: ShotPlan) -> dict:
    return {
        "marker_id": plan.marker_id,
        "techniques": {
            category.json_key: plan.techniques[category].json_key
            for category in CATEGORY_ORDER
        },
        "pose": pose_to_dict(plan.pose),
        "focus_point": list(plan.focus_point),
        "settings": {k: plan.settings[k] for k in sorted(plan.settings)},
        "attempts": plan.attempts,
        "degraded": plan.degraded,
        "used_default": sorted(c.json_key for c in plan.used_default),
    }


def node_to_dict(node: StoryboardNode) -> dict:
    return {
        "marker_id": node.plan.marker_id,
        "locked": node.locked,
        "simulation_seed": node.simulation_seed,
        "preview_ref": node.preview_ref,
        "plan": plan_to_dict(node.plan),
    }


def serialize_node(node: StoryboardNode) -> bytes:
    return jsonutil.dump_bytes(node_to_dict(node))


def storyboard_to_dict(storyboard: Storyboard) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "seed": storyboard.config.seed,
            "scene_path": storyboard.config.scene_path,
            "dataset_path": storyboard.config.dataset_path,
            "params": storyboard.config.params.to_dict(),
        },
        "stale_markers": list(storyboard.stale_marker_ids),
        "nodes": [node_to_dict(n) for n in storyboard.nodes],
    }


def save_storyboard(storyboard: Storyboard) -> bytes:
    return jsonutil.dump_bytes(storyboard_to_dict(storyboard))


def _require(doc: dict, keys: set[str], context: str) -> None:
    if not isinstance(doc, dict):
        raise SchemaError(f"{context} must be an object")
    missing = keys - set(doc)
    if missing:
        raise SchemaError(f"{context} missing fields: {sorted(missing)}")
    extra = set(doc) - keys
    if extra:
        raise VersionError(f"{context} carries unknown fields: {sorted(extra)}")


def _vec3_from(value, context: str):
    if not isinstance(value, list) or len(value) != 3:
        raise SchemaError(f"{context} must be a 3-number array")
    return (float(value[0]), float(value[1]), float(value[2]))


def pose_from_dict(doc: dict) -> CameraPose:
    _require(doc, {"position", "look_dir", "up", "fov", "aspect"}, "pose")
    return CameraPose(
        position=_vec3_from(doc["position"], "pose.position"),
        look_dir=_vec3_from(doc["look_dir"], "pose.look_dir"),
        up=_vec3_from(doc["up"], "pose.up"),
        fov=float(doc["fov"]),
        aspect=float(doc["aspect"]),
    )


def plan_from_dict(doc: dict) -> ShotPlan:
    _require(
        doc,
        {
            "marker_id", "techniques", "pose", "focus_point",
            "settings", "attempts", "degraded", "used_default",
        },
        "plan",
    )
    techniques: dict[Category, Technique] = {}
    for category in CATEGORY_ORDER:
        key = doc["techniques"].get(category.json_key)
        if key not in TECHNIQUE_BY_KEY:
            raise SchemaError(f"plan has no valid technique for '{category.json_key}'")
        techniques[category] = TECHNIQUE_BY_KEY[key]
    try:
        used_default = frozenset(Category(c) for c in doc["used_default"])
    except ValueError as exc:
        raise SchemaError(f"bad category in used_default: {exc}") from exc
    return ShotPlan(
        marker_id=str(doc["marker_id"]),
        techniques=techniques,
        pose=pose_from_dict(doc["pose"]),
        focus_point=_vec3_from(doc["focus_point"], "plan.focus_point"),
        settings={str(k): float(v) for k, v in doc["settings"].items()},
        attempts=int(doc["attempts"]),
        degraded=bool(doc["degraded"]),
        used_default=used_default,
    )


def node_from_dict(doc: dict) -> StoryboardNode:
    _require(
        doc, {"marker_id", "locked", "simulation_seed", "preview_ref", "plan"}, "node"
    )
    plan = plan_from_dict(doc["plan"])
    if plan.marker_id != doc["marker_id"]:
        raise SchemaError("node and plan disagree on marker id")
    return StoryboardNode(
        plan=plan,
        locked=bool(doc["locked"]),
        preview_ref=str(doc["preview_ref"]),
        simulation_seed=int(doc["simulation_seed"]),
    )


def load_storyboard(data: bytes | str) -> Storyboard:
    import json

    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("storyboard document must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise VersionError(f"unsupported storyboard schema version {version!r}")
    _require(doc, {"schema_version", "config", "stale_markers", "nodes"}, "storyboard")
    cdoc = doc["config"]
    _require(cdoc, {"seed", "scene_path", "dataset_path", "params"}, "config")
    params = RuleParams().with_updates(cdoc["params"])
    if not isinstance(doc["nodes"], list):
        raise SchemaError("'nodes' must be an array")
    nodes = tuple(node_from_dict(n) for n in doc["nodes"])
    return Storyboard(
        nodes=nodes,
        config=SimulationConfig(
            seed=int(cdoc["seed"]),
            params=params,
            scene_path=str(cdoc["scene_path"]),
            dataset_path=str(cdoc["dataset_path"]),
        ),
        stale_marker_ids=tuple(str(s) for s in doc["stale_markers"]),
    )

"""Technique selection for one marker: general-rule filtering, shot-based
filtering against the running history, user-preference filtering, then a
probability-weighted draw, category by category in pipeline order.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, fields, replace
from typing import TYPE_CHECKING

from . import geometry as geo
from . import placement
from .dataset import AggregateStats, CategoryModel, member_style_means
from .errors import OrderViolationError, RangeError
from .geometry import Vec3
from .proxy import OccupancyGrid
from .scene import ProxyVolume, SceneDescription, ShotMarker
from .techniques import (
    CATEGORY_DEFAULTS,
    CATEGORY_MEMBERS,
    CATEGORY_ORDER,
    FAST_ZOOMS,
    MOVING_TRACKERS,
    Category,
    Technique,
)

if TYPE_CHECKING:
    from .placement import ShotPlan


@dataclass(frozen=True)
class RuleParams:
    """User-tunable knobs for rule bending and preference matching."""

    min_shot_distance: float = 0.3
    max_shot_distance: float = 40.0
    thirds_obedience: float = 0.5
    thirds_visibility_priority: bool = True
    max_transition_distance: float = 10.0
    dramatisation_threshold: float = 0.35
    pace_threshold: float = 0.35
    preferences_enabled: bool = True
    selection_timeout: int = 16
    lead_time: float = 0.3

    def __post_init__(self) -> None:
        if not 0.0 < self.min_shot_distance < self.max_shot_distance:
            raise RangeError("need 0 < min_shot_distance < max_shot_distance")
        for name in ("thirds_obedience", "dramatisation_threshold", "pace_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise RangeError(f"{name} must be in [0, 1], got {value}")
        if self.max_transition_distance <= 0.0:
            raise RangeError("max_transition_distance must be positive")
        if self.selection_timeout < 1:
            raise RangeError("selection_timeout must be at least 1 attempt")
        if self.lead_time < 0.0:
            raise RangeError("lead_time must be non-negative")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_updates(self, updates: dict) -> "RuleParams":
        known = {f.name for f in fields(self)}
        unknown = set(updates) - known
        if unknown:
            raise RangeError(f"unknown parameters: {sorted(unknown)}")
        return replace(self, **updates)


@dataclass
class SelectionContext:
    """Everything a marker's selection pass can see, including what earlier
    categories and the preceding marker already decided.
    """

    marker: ShotMarker
    scene: SceneDescription
    grid: OccupancyGrid
    subject: Vec3
    previous_plan: "ShotPlan | None" = None
    current_selections: dict[Category, Technique] = field(default_factory=dict)
    vis_grid: OccupancyGrid | None = None
    proxies: tuple[ProxyVolume, ...] | None = None
    technique_overrides: dict | None = None


@dataclass(frozen=True)
class SelectionResult:
    per_category: dict[Category, Technique]
    used_default: frozenset[Category]
    rng_draws: int


def filter_general(
    category: Category,
    ctx: SelectionContext,
    params: RuleParams,
    candidates: list[Technique] | None = None,
) -> list[Technique]:
    """Drop techniques whose geometry cannot work at this marker: positioning
    bands with no workable probe, and the dolly zoom when no clear backward
    corridor exists. Look/tracking/FX are otherwise geometry-free.
    """
    if candidates is None:
        candidates = list(CATEGORY_MEMBERS[category])
    if category == Category.POSITIONING:
        return [
            t
            for t in candidates
            if placement.technique_feasible(
                t,
                ctx.subject,
                ctx.scene,
                ctx.marker.time,
                ctx.grid,
                params,
                vis_grid=ctx.vis_grid,
                proxies=ctx.proxies,
                target_ids=ctx.marker.targets,
                overrides=ctx.technique_overrides,
            )
        ]
    if category == Category.LOOK and Technique.DOLLY_ZOOM in candidates:
        positioning = ctx.current_selections.get(
            Category.POSITIONING, CATEGORY_DEFAULTS[Category.POSITIONING]
        )
        ok = placement.dolly_zoom_feasible(
            positioning,
            ctx.subject,
            ctx.scene,
            ctx.marker.time,
            ctx.grid,
            params,
            vis_grid=ctx.vis_grid,
            proxies=ctx.proxies,
            target_ids=ctx.marker.targets,
        )
        if not ok:
            return [t for t in candidates if t != Technique.DOLLY_ZOOM]
    return list(candidates)


def filter_shot_based(
    category: Category,
    candidates: list[Technique],
    ctx: SelectionContext,
    params: RuleParams,
) -> list[Technique]:
    """History rules: no back-to-back fast zooms, no master-into-close-up,
    no transition longer than the cap, no repeated slow motion, and no
    position-moving tracker under a dolly zoom.
    """
    previous = ctx.previous_plan
    out = list(candidates)
    if category == Category.LOOK and previous is not None:
        if previous.techniques.get(Category.LOOK) in FAST_ZOOMS:
            out = [t for t in out if t not in FAST_ZOOMS]
    elif category == Category.POSITIONING and previous is not None:
        if previous.techniques.get(Category.POSITIONING) == Technique.MASTER:
            out = [t for t in out if t != Technique.CLOSE_UP]
        anchor = geo.dist(previous.pose.position, ctx.subject)
        kept = []
        for t in out:
            center = placement.band_center_distance(
                t, ctx.scene, ctx.marker.time, ctx.subject, params
            )
            # closest the new position can possibly be to the old one
            if abs(anchor - center) <= params.max_transition_distance:
                kept.append(t)
        out = kept
    elif category == Category.FX and previous is not None:
        if previous.techniques.get(Category.FX) == Technique.SLOW_MOTION:
            out = [t for t in out if t != Technique.SLOW_MOTION]
    elif category == Category.TRACKING:
        if Category.LOOK not in ctx.current_selections:
            raise OrderViolationError("tracking filtered before the look was decided")
        if ctx.current_selections[Category.LOOK] == Technique.DOLLY_ZOOM:
            out = [t for t in out if t not in MOVING_TRACKERS]
    return out


def filter_preferences(
    category: Category,
    candidates: list[Technique],
    marker: ShotMarker,
    stats: AggregateStats,
    params: RuleParams,
) -> list[Technique]:
    """Keep techniques whose director style values sit within the marker's
    dramatisation/pace thresholds. Techniques the director never used have
    no style value; they survive only when everything else was eliminated.
    """
    if not params.preferences_enabled or not marker.use_preferences:
        return list(candidates)
    matched = []
    unknown = []
    for technique in candidates:
        means = member_style_means(stats, technique)
        if means is None:
            unknown.append(technique)
            continue
        mean_d, mean_p = means
        if (
            abs(mean_d - marker.dramatisation) <= params.dramatisation_threshold
            and abs(mean_p - marker.pace) <= params.pace_threshold
        ):
            matched.append(technique)
    return matched if matched else unknown


def sample_technique(
    category: Category,
    candidates: list[Technique],
    model: CategoryModel,
    rng: random.Random,
) -> tuple[Technique, int, bool]:
    """Pick one technique: empty candidates fall to the category default,
    a singleton needs no draw, anything else samples by the renormalized
    conditional probabilities.

    A category with no probability mass at all falls to its default; when
    only the filtered candidates are all zero-probability (the director has
    mass elsewhere in the category) the draw is uniform over them.

    Returns (technique, rng draws used, fell back to default).
    """
    if not candidates:
        return CATEGORY_DEFAULTS[category], 0, True
    if len(candidates) == 1:
        return candidates[0], 0, False
    if all(
        model.probability(category, t) <= 0.0 for t in CATEGORY_MEMBERS[category]
    ):
        return CATEGORY_DEFAULTS[category], 0, True
    weights = [model.probability(category, t) for t in candidates]
    total = sum(weights)
    r = rng.random()
    if total <= 0.0:
        index = min(int(r * len(candidates)), len(candidates) - 1)
        return candidates[index], 1, False
    acc = 0.0
    for technique, weight in zip(candidates, weights):
        acc += weight / total
        if r < acc:
            return technique, 1, False
    return candidates[-1], 1, False


def select_for_marker(
    ctx: SelectionContext,
    model: CategoryModel,
    stats: AggregateStats,
    params: RuleParams,
    rng: random.Random,
    banned_positioning: frozenset[Technique] = frozenset(),
) -> SelectionResult:
    """Run the three filters and the draw for each category in order,
    feeding every decision into the context before the next category.
    """
    ctx.current_selections = {}
    draws = 0
    defaults: set[Category] = set()
    for category in CATEGORY_ORDER:
        candidates = list(CATEGORY_MEMBERS[category])
        if category == Category.POSITIONING and banned_positioning:
            candidates = [t for t in candidates if t not in banned_positioning]
        candidates = filter_general(category, ctx, params, candidates)
        candidates = filter_shot_based(category, candidates, ctx, params)
        candidates = filter_preferences(category, candidates, ctx.marker, stats, params)
        technique, used, fell_back = sample_technique(category, candidates, model, rng)
        draws += used
        if fell_back:
            defaults.add(category)
        ctx.current_selections[category] = technique
    return SelectionResult(
        per_category=dict(ctx.current_selections),
        used_default=frozenset(defaults),
        rng_draws=draws,
    )

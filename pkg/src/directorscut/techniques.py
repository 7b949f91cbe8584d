"""Cinematography technique and category vocabulary.

The first 15 techniques are the annotated ones; their integer codes fix the
feature-vector layout used by the discriminator and must never be reordered.
The last three (STATIONARY_SHOT, NO_TRACKING, NO_FX) are not annotated in
clip data: they are the per-category "do nothing" choices. STATIONARY_SHOT
inherits the annotated STATIONARY_TRACKING frequency; NO_TRACKING and NO_FX
get the leftover clip mass (see dataset.category_frequencies).
"""
from __future__ import annotations

from enum import Enum, IntEnum


class Technique(IntEnum):
    GODS_EYE = 0
    CLOSE_UP = 1
    MASTER = 2
    PAN = 3
    MEDIUM = 4
    LONG = 5
    FREE = 6
    CLOSE_UP_ZOOM = 7
    QUICK_ZOOM = 8
    DOLLY_ZOOM = 9
    STATIONARY_TRACKING = 10
    HANDHELD_TRACKING = 11
    STEADYCAM_TRACKING = 12
    SLOW_MOTION = 13
    CUT = 14
    # selectable rest choices, never present in clip counts
    STATIONARY_SHOT = 15
    NO_TRACKING = 16
    NO_FX = 17

    @property
    def json_key(self) -> str:
        return self.name.lower()


ANNOTATED: tuple[Technique, ...] = tuple(Technique(i) for i in range(15))
TECHNIQUE_BY_KEY: dict[str, Technique] = {t.json_key: t for t in Technique}
ANNOTATED_KEYS: tuple[str, ...] = tuple(t.json_key for t in ANNOTATED)


class Category(Enum):
    POSITIONING = "positioning"
    LOOK = "look"
    TRACKING = "tracking"
    FX = "fx"

    @property
    def json_key(self) -> str:
        return self.value


CATEGORY_ORDER: tuple[Category, ...] = (
    Category.POSITIONING,
    Category.LOOK,
    Category.TRACKING,
    Category.FX,
)

CATEGORY_MEMBERS: dict[Category, tuple[Technique, ...]] = {
    Category.POSITIONING: (
        Technique.CLOSE_UP,
        Technique.GODS_EYE,
        Technique.MASTER,
        Technique.MEDIUM,
        Technique.LONG,
        Technique.PAN,
        Technique.FREE,
    ),
    Category.LOOK: (
        Technique.QUICK_ZOOM,
        Technique.DOLLY_ZOOM,
        Technique.CLOSE_UP_ZOOM,
        Technique.STATIONARY_SHOT,
    ),
    Category.TRACKING: (
        Technique.STEADYCAM_TRACKING,
        Technique.HANDHELD_TRACKING,
        Technique.NO_TRACKING,
    ),
    Category.FX: (
        Technique.SLOW_MOTION,
        Technique.NO_FX,
    ),
}

CATEGORY_DEFAULTS: dict[Category, Technique] = {
    Category.POSITIONING: Technique.FREE,
    Category.LOOK: Technique.STATIONARY_SHOT,
    Category.TRACKING: Technique.NO_TRACKING,
    Category.FX: Technique.NO_FX,
}

FAST_ZOOMS: frozenset[Technique] = frozenset(
    {Technique.QUICK_ZOOM, Technique.DOLLY_ZOOM}
)
MOVING_TRACKERS: frozenset[Technique] = frozenset(
    {Technique.STEADYCAM_TRACKING, Technique.HANDHELD_TRACKING}
)


def category_of(technique: Technique) -> Category:
    for category, members in CATEGORY_MEMBERS.items():
        if technique in members:
            return category
    raise ValueError(f"{technique.name} belongs to no selection category")

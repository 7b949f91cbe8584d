"""Director imitation datasets: parsing, aggregate statistics, and the
per-category conditional technique probabilities that drive selection.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import EmptyProfileError, RangeError, SchemaError
from .techniques import (
    ANNOTATED,
    ANNOTATED_KEYS,
    CATEGORY_MEMBERS,
    Category,
    Technique,
)


@dataclass(frozen=True)
class ClipAnnotation:
    """Per-clip technique counts plus dramatisation and pace in [0, 1]."""

    counts: dict[Technique, int]
    dramatisation: float
    pace: float
    source_tag: str = ""

    def __post_init__(self) -> None:
        if set(self.counts) != set(ANNOTATED):
            raise SchemaError("clip counts must cover exactly the 15 annotated techniques")
        for tech, count in self.counts.items():
            if not isinstance(count, int) or count < 0:
                raise SchemaError(f"count for {tech.json_key} must be a non-negative integer")
        for name, value in (("dramatisation", self.dramatisation), ("pace", self.pace)):
            if not 0.0 <= value <= 1.0:
                raise RangeError(f"{name} must be in [0, 1], got {value}")

    def feature_vector(self) -> list[float]:
        """Raw counts in annotated-technique code order."""
        return [float(self.counts[t]) for t in ANNOTATED]


@dataclass(frozen=True)
class DirectorProfile:
    director_name: str
    clips: list[ClipAnnotation]

    def __post_init__(self) -> None:
        if not self.director_name:
            raise SchemaError("director name must be non-empty")
        if not self.clips:
            raise EmptyProfileError("profile has no clips")


def clip_from_dict(doc: dict) -> ClipAnnotation:
    if not isinstance(doc, dict):
        raise SchemaError("clip must be an object")
    for key in ("counts", "dramatisation", "pace"):
        if key not in doc:
            raise SchemaError(f"clip is missing '{key}'")
    raw_counts = doc["counts"]
    if not isinstance(raw_counts, dict):
        raise SchemaError("clip counts must be an object")
    missing = [k for k in ANNOTATED_KEYS if k not in raw_counts]
    if missing:
        raise SchemaError(f"clip counts missing technique keys: {missing}")
    unknown = [k for k in raw_counts if k not in ANNOTATED_KEYS]
    if unknown:
        raise SchemaError(f"unknown technique keys: {unknown}")
    counts: dict[Technique, int] = {}
    for tech in ANNOTATED:
        value = raw_counts[tech.json_key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"count for {tech.json_key} must be an integer")
        counts[tech] = value
    for key in ("dramatisation", "pace"):
        if not isinstance(doc[key], (int, float)) or isinstance(doc[key], bool):
            raise SchemaError(f"clip {key} must be a number")
    return ClipAnnotation(
        counts=counts,
        dramatisation=float(doc["dramatisation"]),
        pace=float(doc["pace"]),
        source_tag=str(doc.get("source", "")),
    )


def clip_to_dict(clip: ClipAnnotation) -> dict:
    return {
        "counts": {t.json_key: clip.counts[t] for t in ANNOTATED},
        "dramatisation": clip.dramatisation,
        "pace": clip.pace,
        "source": clip.source_tag,
    }


def load_director_profile(data: bytes | str) -> DirectorProfile:
    """Parse and validate a director dataset document.

    Raises SchemaError / RangeError / EmptyProfileError on bad input.
    """
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("dataset document must be an object")
    if "director" not in doc or "clips" not in doc:
        raise SchemaError("dataset document needs 'director' and 'clips'")
    if not isinstance(doc["clips"], list):
        raise SchemaError("'clips' must be an array")
    if not doc["clips"]:
        raise EmptyProfileError("dataset has no clips")
    clips = [clip_from_dict(c) for c in doc["clips"]]
    return DirectorProfile(director_name=str(doc["director"]), clips=clips)


def profile_to_dict(profile: DirectorProfile) -> dict:
    return {
        "director": profile.director_name,
        "clips": [clip_to_dict(c) for c in profile.clips],
    }


@dataclass(frozen=True)
class AggregateStats:
    """Total technique frequencies and count-weighted style means.

    The mean maps only contain techniques that occur at least once; mean
    dramatisation/pace of a technique weight each clip's style value by how
    often the clip uses the technique.
    """

    frequency: dict[Technique, int]
    mean_dramatisation: dict[Technique, float]
    mean_pace: dict[Technique, float]
    clip_count: int


def aggregate(profile: DirectorProfile) -> AggregateStats:
    frequency = {t: 0 for t in ANNOTATED}
    weighted_d = {t: 0.0 for t in ANNOTATED}
    weighted_p = {t: 0.0 for t in ANNOTATED}
    for clip in profile.clips:
        for tech in ANNOTATED:
            n = clip.counts[tech]
            if n:
                frequency[tech] += n
                weighted_d[tech] += n * clip.dramatisation
                weighted_p[tech] += n * clip.pace
    mean_d = {t: weighted_d[t] / frequency[t] for t in ANNOTATED if frequency[t] > 0}
    mean_p = {t: weighted_p[t] / frequency[t] for t in ANNOTATED if frequency[t] > 0}
    return AggregateStats(
        frequency=frequency,
        mean_dramatisation=mean_d,
        mean_pace=mean_p,
        clip_count=len(profile.clips),
    )


def category_frequencies(stats: AggregateStats, category: Category) -> dict[Technique, int]:
    """Frequency of each selectable member of a category.

    Annotated members use their observed totals. STATIONARY_SHOT inherits
    the STATIONARY_TRACKING total (a stationary look is the same observable
    behaviour). NO_TRACKING and NO_FX take the clip mass left over by the
    category's annotated members, clamped at zero, so the "do nothing"
    choice carries weight when a director rarely uses the category.
    """
    members = CATEGORY_MEMBERS[category]
    freqs: dict[Technique, int] = {}
    for member in members:
        if member == Technique.STATIONARY_SHOT:
            freqs[member] = stats.frequency[Technique.STATIONARY_TRACKING]
        elif member in (Technique.NO_TRACKING, Technique.NO_FX):
            used = sum(stats.frequency[m] for m in members if m in stats.frequency)
            freqs[member] = max(0, stats.clip_count - used)
        else:
            freqs[member] = stats.frequency[member]
    return freqs


@dataclass(frozen=True)
class CategoryModel:
    """p(technique | category) for every selectable member.

    Within a category the member probabilities are the frequency ratios;
    a category whose members never occur gets all zeros and selection falls
    back to the category default.
    """

    probabilities: dict[Category, dict[Technique, float]] = field(default_factory=dict)

    def probability(self, category: Category, technique: Technique) -> float:
        return self.probabilities[category].get(technique, 0.0)


def conditional_probabilities(stats: AggregateStats) -> CategoryModel:
    probabilities: dict[Category, dict[Technique, float]] = {}
    for category in CATEGORY_MEMBERS:
        freqs = category_frequencies(stats, category)
        total = sum(freqs.values())
        if total == 0:
            probabilities[category] = {t: 0.0 for t in freqs}
        else:
            probabilities[category] = {t: f / total for t, f in freqs.items()}
    return CategoryModel(probabilities=probabilities)


def member_style_means(
    stats: AggregateStats, member: Technique
) -> tuple[float, float] | None:
    """(mean dramatisation, mean pace) for a selectable member, or None.

    STATIONARY_SHOT borrows STATIONARY_TRACKING's means; the pure rest
    choices have no annotated style and return None, as does any technique
    that never occurs in the profile.
    """
    if member == Technique.STATIONARY_SHOT:
        member = Technique.STATIONARY_TRACKING
    elif member in (Technique.NO_TRACKING, Technique.NO_FX):
        return None
    if member not in stats.mean_dramatisation:
        return None
    return stats.mean_dramatisation[member], stats.mean_pace[member]

"""Sequence property catalog: platform, scene, duration, motion dynamics,
environment dynamics, revisit frequency, and an optional difficulty label.

Property labels are annotation inputs, not computed from sensor data.
Duration is the one property with numeric thresholds: sequences under
2 minutes are Short, over 10 minutes Long, otherwise Medium, with the
boundary values falling into Medium.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum

from .errors import (
    DuplicateSequence,
    EmptyCatalog,
    MissingColumn,
    NonPositiveDuration,
    UnknownEnumValue,
)


class Platform(Enum):
    CAR = "Car"
    TRAIN = "Train"
    MAV = "MAV"
    GROUND_ROBOT = "GroundRobot"
    HAND_HELD = "HandHeld"
    AR_HEADSET = "ARHeadset"
    SYNTHESIZED = "Synthesized"


class Scene(Enum):
    INDOOR = "Indoor"
    OUTDOOR = "Outdoor"
    SYNTHESIZED = "Synthesized"


class DurationClass(Enum):
    SHORT = "Short"
    MEDIUM = "Medium"
    LONG = "Long"


class Level(Enum):
    """Three-level scale used for motion/environment dynamics and revisit frequency."""

    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


class Difficulty(Enum):
    EASY = "Easy"
    MEDIUM = "Medium"
    DIFFICULT = "Difficult"


#: Duration thresholds in seconds; both boundaries map to Medium.
SHORT_BELOW_S = 120.0
LONG_ABOVE_S = 600.0

CATALOG_COLUMNS = (
    "sequence", "platform", "scene", "duration",
    "motion_dyn", "environ_dyn", "revisit_freq", "difficulty",
)

#: Name variants seen across published tables for the same sequence; maps
#: the variant (normalized) to the catalog name. The "conf. hall1" /
#: "Conf. hall2" and "V1 01 diff" / "V1 03 diff" pairs are inconsistent in
#: the source material; both spellings are kept addressable.
SEQUENCE_ALIASES = {
    "kitti seq 04": "Seq 04",
    "kitti seq 02": "Seq 02",
    "conf. hall1": "Conf. hall2",
    "conf. hall2": "Conf. hall2",
    "v1 01 diff": "V1 03 diff",
    "outdoors4": "outdoor4",
}


@dataclass(frozen=True)
class SequenceRecord:
    name: str
    platform: Platform
    scene: Scene
    duration: DurationClass
    motion_dyn: Level
    environ_dyn: Level
    revisit_freq: Level
    difficulty: Difficulty | None = None


@dataclass(frozen=True)
class CatalogSummary:
    """Per-property value counts and integer percentages."""

    total: int
    counts: dict[str, dict[str, int]]
    percentages: dict[str, dict[str, int]]


def _normalize(value: str) -> str:
    return "".join(value.lower().split()).replace("_", "").replace("-", "")


def _parse_enum(enum_cls, value: str, row: int, column: str):
    key = _normalize(value)
    for member in enum_cls:
        if _normalize(member.value) == key:
            return member
    raise UnknownEnumValue(row, column, value)


def normalize_sequence_name(name: str) -> str:
    return " ".join(name.split()).lower()


def resolve_sequence_name(name: str, records) -> SequenceRecord | None:
    """Find a catalog record by name, tolerating case and known aliases."""
    wanted = SEQUENCE_ALIASES.get(normalize_sequence_name(name), name)
    wanted_norm = normalize_sequence_name(wanted)
    for rec in records:
        if normalize_sequence_name(rec.name) == wanted_norm:
            return rec
    return None


def parse_catalog(csv_text: str) -> list[SequenceRecord]:
    """Parse a catalog CSV with the canonical eight-column header.

    Enumeration values are matched case-insensitively (spaces, hyphens,
    and underscores ignored); the difficulty column may be empty.
    """
    reader = csv.DictReader(io.StringIO(csv_text))
    if reader.fieldnames is None:
        raise MissingColumn("empty catalog input")
    missing = [c for c in CATALOG_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise MissingColumn(f"missing columns: {', '.join(missing)}")

    records: list[SequenceRecord] = []
    seen: set[str] = set()
    for row_no, row in enumerate(reader, start=2):
        name = (row["sequence"] or "").strip()
        if not name:
            raise UnknownEnumValue(row_no, "sequence", name)
        key = normalize_sequence_name(name)
        if key in seen:
            raise DuplicateSequence(name)
        seen.add(key)
        difficulty_raw = (row["difficulty"] or "").strip()
        records.append(SequenceRecord(
            name=name,
            platform=_parse_enum(Platform, row["platform"], row_no, "platform"),
            scene=_parse_enum(Scene, row["scene"], row_no, "scene"),
            duration=_parse_enum(DurationClass, row["duration"], row_no, "duration"),
            motion_dyn=_parse_enum(Level, row["motion_dyn"], row_no, "motion_dyn"),
            environ_dyn=_parse_enum(Level, row["environ_dyn"], row_no, "environ_dyn"),
            revisit_freq=_parse_enum(Level, row["revisit_freq"], row_no, "revisit_freq"),
            difficulty=(
                _parse_enum(Difficulty, difficulty_raw, row_no, "difficulty")
                if difficulty_raw else None
            ),
        ))
    if not records:
        raise EmptyCatalog("catalog has no rows")
    return records


def serialize_catalog(records) -> str:
    """Inverse of parse_catalog."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CATALOG_COLUMNS)
    for r in records:
        writer.writerow([
            r.name, r.platform.value, r.scene.value, r.duration.value,
            r.motion_dyn.value, r.environ_dyn.value, r.revisit_freq.value,
            r.difficulty.value if r.difficulty is not None else "",
        ])
    return out.getvalue()


def categorize_duration(seconds: float) -> DurationClass:
    """Map a duration in seconds onto Short / Medium / Long."""
    if seconds <= 0:
        raise NonPositiveDuration(f"duration must be positive, got {seconds}")
    if seconds < SHORT_BELOW_S:
        return DurationClass.SHORT
    if seconds > LONG_ABOVE_S:
        return DurationClass.LONG
    return DurationClass.MEDIUM


_SUMMARY_PROPERTIES = (
    ("platform", Platform),
    ("scene", Scene),
    ("duration", DurationClass),
    ("motion_dyn", Level),
    ("environ_dyn", Level),
    ("revisit_freq", Level),
    ("difficulty", Difficulty),
)


def summarize(records) -> CatalogSummary:
    """Count property values and report integer percentages per property.

    Unlabeled difficulty entries are counted under "unlabeled" so that
    every property's percentages account for the full record count.
    """
    records = list(records)
    if not records:
        raise EmptyCatalog("cannot summarize an empty catalog")
    total = len(records)
    counts: dict[str, dict[str, int]] = {}
    for prop, _ in _SUMMARY_PROPERTIES:
        tally: dict[str, int] = {}
        for rec in records:
            value = getattr(rec, prop)
            key = value.value if value is not None else "unlabeled"
            tally[key] = tally.get(key, 0) + 1
        counts[prop] = tally
    percentages = {
        prop: {k: round(100 * v / total) for k, v in tally.items()}
        for prop, tally in counts.items()
    }
    return CatalogSummary(total=total, counts=counts, percentages=percentages)

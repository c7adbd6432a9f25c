"""Time-dilated frame playback against a pluggable estimator.

Frames are delivered on a schedule derived from their source timestamps
divided by a rate factor (0.2 gives five times the per-frame budget).
Two delivery policies exist: REALTIME_DROP offers frames at their
scheduled times and drops (never queues) any frame arriving while the
estimator is still busy; EVERY_FRAME waits for the previous frame to
finish and processes everything.

A VIRTUAL clock advances by the processing durations the estimator
declares, making runs exactly reproducible; WALL uses real time for
live profiling.
"""

from __future__ import annotations

import csv
import io
import json
import random
import time
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidSpec, NonMonotonicFrames, NoTrackedFrames

#: Rate factor used for slow-motion playback (five-fold time dilation).
SLOMO_RATE = 0.2

DEFAULT_COMPONENTS = (
    ("feature_extraction", 0.015),
    ("feature_matching", 0.010),
    ("pose_optimization", 0.005),
)


class PlaybackMode(Enum):
    REALTIME_DROP = "realtime_drop"
    EVERY_FRAME = "every_frame"


class ClockMode(Enum):
    WALL = "wall"
    VIRTUAL = "virtual"


@dataclass(frozen=True)
class FrameEvent:
    index: int
    t_source: float
    payload: object = None


@dataclass(frozen=True)
class PlaybackConfig:
    rate_factor: float = 1.0
    mode: PlaybackMode = PlaybackMode.REALTIME_DROP
    clock: ClockMode = ClockMode.VIRTUAL

    def __post_init__(self):
        if self.rate_factor <= 0:
            raise ValueError("rate_factor must be positive")


@dataclass(frozen=True)
class TimingSpan:
    frame_index: int
    component: str
    duration: float


@dataclass(frozen=True)
class ComponentStats:
    count: int
    total_s: float
    mean_s: float


@dataclass(frozen=True)
class RunLog:
    """Everything one playback produced.

    ``delivered`` holds (frame index, delivery time) for processed
    frames; every other frame index is in ``dropped`` (including frames
    whose processing faulted).
    """

    delivered: tuple[tuple[int, float], ...]
    dropped: tuple[int, ...]
    spans: tuple[TimingSpan, ...]
    tracked: dict[int, bool]
    faults: tuple[tuple[int, str], ...] = ()

    @property
    def delivered_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.delivered)


def schedule(frames, config: PlaybackConfig) -> list[tuple[FrameEvent, float]]:
    """Delivery plan: frame i is due (t_i - t_0) / rate_factor after start."""
    frames = list(frames)
    if not frames:
        raise NonMonotonicFrames("no frames to schedule")
    for a, b in zip(frames, frames[1:]):
        if b.t_source <= a.t_source:
            raise NonMonotonicFrames(
                f"frame {b.index} timestamp {b.t_source} does not increase"
            )
    t0 = frames[0].t_source
    return [(f, (f.t_source - t0) / config.rate_factor) for f in frames]


def run(frames, estimator, config: PlaybackConfig = PlaybackConfig()) -> RunLog:
    """Play frames against an estimator and record the outcome.

    The estimator implements ``process(frame) -> (tracked, spans)``. An
    exception from process() is recorded as a fault and the frame counts
    as dropped; the run continues.
    """
    plan = schedule(frames, config)
    delivered: list[tuple[int, float]] = []
    dropped: list[int] = []
    spans: list[TimingSpan] = []
    tracked: dict[int, bool] = {}
    faults: list[tuple[int, str]] = []

    def process(frame: FrameEvent, at: float) -> float:
        """Returns the declared processing duration; 0.0 on fault."""
        try:
            ok, frame_spans = estimator.process(frame)
        except Exception as exc:  # noqa: BLE001 - estimator faults are data
            faults.append((frame.index, repr(exc)))
            dropped.append(frame.index)
            return 0.0
        delivered.append((frame.index, at))
        tracked[frame.index] = bool(ok)
        spans.extend(frame_spans)
        return sum(s.duration for s in frame_spans)

    if config.clock is ClockMode.VIRTUAL:
        busy_until = 0.0
        for frame, due in plan:
            if config.mode is PlaybackMode.REALTIME_DROP:
                if due < busy_until:
                    dropped.append(frame.index)
                    continue
                start = due
            else:
                start = max(due, busy_until)
            busy_until = start + process(frame, start)
    else:
        t0 = time.monotonic()
        busy_end = 0.0
        for frame, due in plan:
            now = time.monotonic() - t0
            if config.mode is PlaybackMode.REALTIME_DROP:
                if due < busy_end:
                    dropped.append(frame.index)
                    continue
                if due > now:
                    time.sleep(due - now)
                start = time.monotonic() - t0
            else:
                start = now
            wall_before = time.monotonic()
            process(frame, start)
            busy_end = start + (time.monotonic() - wall_before)

    return RunLog(
        delivered=tuple(delivered),
        dropped=tuple(dropped),
        spans=tuple(spans),
        tracked=tracked,
        faults=tuple(faults),
    )


def aggregate_profile(logs) -> dict[str, ComponentStats]:
    """Mean per-component time over tracked frames across all logs.

    Spans on untracked frames do not count.
    """
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for log in logs:
        for span in log.spans:
            if log.tracked.get(span.frame_index):
                totals[span.component] = totals.get(span.component, 0.0) + span.duration
                counts[span.component] = counts.get(span.component, 0) + 1
    if not counts:
        raise NoTrackedFrames("no spans on tracked frames")
    return {
        name: ComponentStats(
            count=counts[name],
            total_s=totals[name],
            mean_s=totals[name] / counts[name],
        )
        for name in sorted(counts)
    }


# --- synthetic estimator -------------------------------------------------


@dataclass(frozen=True)
class SyntheticEstimatorSpec:
    """Declarative stand-in for a real tracking pipeline.

    Each component takes a fixed duration or a seeded uniform draw from
    (low, high); a frame is tracked with the given probability. With
    ``realtime`` the estimator actually sleeps for its declared time,
    for wall-clock runs.
    """

    components: tuple[tuple[str, object], ...] = DEFAULT_COMPONENTS
    tracked_probability: float = 1.0
    seed: int = 0
    realtime: bool = False

    def __post_init__(self):
        if not self.components:
            raise InvalidSpec("at least one component is required")
        for name, dur in self.components:
            if isinstance(dur, (int, float)):
                if dur < 0:
                    raise InvalidSpec(f"negative duration for {name!r}")
            elif isinstance(dur, tuple) and len(dur) == 2:
                lo, hi = dur
                if lo < 0 or hi < lo:
                    raise InvalidSpec(f"bad duration range for {name!r}: {dur}")
            else:
                raise InvalidSpec(f"duration of {name!r} must be a number or (low, high)")
        if not 0.0 <= self.tracked_probability <= 1.0:
            raise InvalidSpec("tracked_probability must be in [0, 1]")

    @classmethod
    def from_mapping(cls, data: dict) -> "SyntheticEstimatorSpec":
        try:
            raw = data["components"]
        except (KeyError, TypeError):
            raise InvalidSpec("spec needs a 'components' mapping") from None
        if not isinstance(raw, dict):
            raise InvalidSpec("'components' must map names to durations")
        components = tuple(
            (name, tuple(dur) if isinstance(dur, list) else dur)
            for name, dur in raw.items()
        )
        return cls(
            components=components,
            tracked_probability=float(data.get("tracked_probability", 1.0)),
            seed=int(data.get("seed", 0)),
            realtime=bool(data.get("realtime", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> "SyntheticEstimatorSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"spec is not valid JSON: {exc}") from None
        return cls.from_mapping(data)


class SyntheticEstimator:
    """Deterministic estimator built from a SyntheticEstimatorSpec.

    Per frame it draws component durations in spec order, then the
    tracked flag; the RNG is owned by the instance, so a fresh instance
    replays identically.
    """

    def __init__(self, spec: SyntheticEstimatorSpec):
        self.spec = spec
        self._rng = random.Random(spec.seed)

    def process(self, frame: FrameEvent):
        spans = []
        for name, dur in self.spec.components:
            if isinstance(dur, tuple):
                duration = self._rng.uniform(dur[0], dur[1])
            else:
                duration = float(dur)
            spans.append(TimingSpan(frame_index=frame.index, component=name, duration=duration))
        tracked = self._rng.random() < self.spec.tracked_probability
        if self.spec.realtime:
            time.sleep(sum(s.duration for s in spans))
        return tracked, spans


def synthetic_estimator(spec: SyntheticEstimatorSpec) -> SyntheticEstimator:
    return SyntheticEstimator(spec)


# --- file formats ---------------------------------------------------------

def parse_frames_csv(text: str) -> list[FrameEvent]:
    """Frame list CSV: ``index,t_source``."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "index" not in reader.fieldnames or "t_source" not in reader.fieldnames:
        raise ValueError("frame CSV needs columns index,t_source")
    return [
        FrameEvent(index=int(row["index"]), t_source=float(row["t_source"]))
        for row in reader
    ]


def make_frames(count: int, rate_hz: float, t0: float = 0.0) -> list[FrameEvent]:
    """Uniform frame grid, handy for synthetic runs."""
    return [FrameEvent(index=i, t_source=t0 + i / rate_hz) for i in range(count)]


def write_profile_csv(profile: dict[str, ComponentStats]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["component", "count", "total_s", "mean_s"])
    for name in sorted(profile):
        stats = profile[name]
        writer.writerow([name, stats.count, repr(stats.total_s), repr(stats.mean_s)])
    return out.getvalue()


def runlog_to_json(log: RunLog) -> str:
    payload = {
        "delivered": [[i, t] for i, t in log.delivered],
        "dropped": list(log.dropped),
        "spans": [[s.frame_index, s.component, s.duration] for s in log.spans],
        "tracked": [[i, flag] for i, flag in sorted(log.tracked.items())],
        "faults": [[i, msg] for i, msg in log.faults],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def runlog_from_json(text: str) -> RunLog:
    data = json.loads(text)
    return RunLog(
        delivered=tuple((int(i), float(t)) for i, t in data["delivered"]),
        dropped=tuple(int(i) for i in data["dropped"]),
        spans=tuple(
            TimingSpan(frame_index=int(i), component=str(c), duration=float(d))
            for i, c, d in data["spans"]
        ),
        tracked={int(i): bool(f) for i, f in data["tracked"]},
        faults=tuple((int(i), str(m)) for i, m in data.get("faults", [])),
    )

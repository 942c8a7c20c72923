"""Core trace records and per-user timeline assembly.

All records are frozen dataclasses. Timestamps are stored as integral seconds;
fractional inputs are truncated on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence


class TraceError(ValueError):
    """A record violates its invariants.

    ``index`` is the position of the offending record in its input sequence
    (None when raised by a single constructor), ``field`` the failing field.
    """

    def __init__(self, message: str, field: str | None = None, index: int | None = None):
        self.field = field
        self.index = index
        prefix = f"record {index}: " if index is not None else ""
        super().__init__(prefix + message)


class Activity(str, Enum):
    STATIONARY = "stationary"
    WALKING = "walking"
    RUNNING = "running"
    UNKNOWN = "unknown"

    @property
    def mobility(self) -> int:
        """Rank used for tie-breaking; higher means more mobile."""
        return _MOBILITY[self]


_MOBILITY = {
    Activity.UNKNOWN: -1,
    Activity.STATIONARY: 0,
    Activity.WALKING: 1,
    Activity.RUNNING: 2,
}

# The three labels a classifier can emit, in canonical order.
LABELS: tuple[Activity, ...] = (Activity.STATIONARY, Activity.WALKING, Activity.RUNNING)


class Provider(str, Enum):
    GPS = "gps"
    NETWORK = "network"
    CELL = "cell"
    OTHER = "other"


def _timestamp(value, name: str = "timestamp") -> int:
    try:
        t = float(value)
    except (TypeError, ValueError):
        raise TraceError(f"{name} is not a number: {value!r}", field=name) from None
    if not math.isfinite(t):
        raise TraceError(f"{name} must be finite, got {value!r}", field=name)
    if t < 0:
        raise TraceError(f"{name} must be non-negative, got {value!r}", field=name)
    return int(t)


@dataclass(frozen=True)
class ApObservation:
    ap_id: str
    rssi: int
    frequency: int | None = None

    def __post_init__(self):
        if not isinstance(self.ap_id, str) or not self.ap_id:
            raise TraceError("ap_id must be a non-empty string", field="ap_id")
        if isinstance(self.rssi, bool) or not isinstance(self.rssi, int):
            raise TraceError(f"rssi must be an integer, got {self.rssi!r}", field="rssi")
        if not -120 <= self.rssi <= 0:
            raise TraceError(f"rssi {self.rssi} outside [-120, 0]", field="rssi")
        if self.frequency is not None and self.frequency <= 0:
            raise TraceError(f"frequency must be positive, got {self.frequency}", field="frequency")


@dataclass(frozen=True)
class WifiScan:
    """One active scan. Observations are kept sorted by ``ap_id``."""

    timestamp: int
    observations: tuple[ApObservation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "timestamp", _timestamp(self.timestamp))
        obs = tuple(sorted(self.observations, key=lambda o: o.ap_id))
        for a, b in zip(obs, obs[1:]):
            if a.ap_id == b.ap_id:
                raise TraceError(f"duplicate ap_id {a.ap_id!r} in one scan", field="observations")
        object.__setattr__(self, "observations", obs)

    @property
    def ap_ids(self) -> frozenset[str]:
        return frozenset(o.ap_id for o in self.observations)


@dataclass(frozen=True)
class GpsFix:
    timestamp: int
    latitude: float
    longitude: float
    reported_speed: float | None = None
    accuracy: float | None = None
    provider: Provider = Provider.GPS

    def __post_init__(self):
        object.__setattr__(self, "timestamp", _timestamp(self.timestamp))
        object.__setattr__(self, "provider", Provider(self.provider))
        if not (math.isfinite(self.latitude) and -90.0 <= self.latitude <= 90.0):
            raise TraceError(f"latitude {self.latitude} outside [-90, 90]", field="latitude")
        if not (math.isfinite(self.longitude) and -180.0 <= self.longitude <= 180.0):
            raise TraceError(f"longitude {self.longitude} outside [-180, 180]", field="longitude")
        for name in ("reported_speed", "accuracy"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise TraceError(f"{name} must be finite and non-negative, got {v}", field=name)


@dataclass(frozen=True)
class ActivitySample:
    timestamp: int
    label: Activity

    def __post_init__(self):
        object.__setattr__(self, "timestamp", _timestamp(self.timestamp))
        try:
            object.__setattr__(self, "label", Activity(self.label))
        except ValueError:
            raise TraceError(f"unknown activity label {self.label!r}", field="label") from None


@dataclass(frozen=True)
class UserTimeline:
    user_id: str
    scans: tuple[WifiScan, ...] = ()
    fixes: tuple[GpsFix, ...] = ()
    activities: tuple[ActivitySample, ...] = ()

    def span(self) -> tuple[int, int] | None:
        """(first, last) timestamp over all streams, or None when empty."""
        ts = [r.timestamp for seq in (self.scans, self.fixes, self.activities) for r in seq[:1] + seq[-1:]]
        return (min(ts), max(ts)) if ts else None


def _check(records: Iterable, cls: type) -> list:
    out = []
    for i, rec in enumerate(records):
        if not isinstance(rec, cls):
            raise TraceError(f"expected {cls.__name__}, got {type(rec).__name__}", index=i)
        # Re-run validation so records built with object.__setattr__ tricks are caught.
        try:
            rec.__post_init__()
            if isinstance(rec, WifiScan):
                for o in rec.observations:
                    o.__post_init__()
        except TraceError as exc:
            raise TraceError(str(exc), field=exc.field, index=i) from None
        out.append(rec)
    return out


def _sorted_unique(records: list) -> tuple:
    # Stable sort; exact duplicates dropped, first occurrence kept.
    ordered = sorted(records, key=lambda r: r.timestamp)
    out, seen, current_t = [], set(), None
    for rec in ordered:
        if rec.timestamp != current_t:
            seen, current_t = set(), rec.timestamp
        if rec in seen:
            continue
        seen.add(rec)
        out.append(rec)
    return tuple(out)


def build_timeline(
    user_id: str,
    scans: Sequence[WifiScan] = (),
    fixes: Sequence[GpsFix] = (),
    activities: Sequence[ActivitySample] = (),
) -> UserTimeline:
    """Sort each stream by timestamp and drop exact duplicates.

    Raises TraceError (with ``index`` and ``field`` set) on the first record
    that violates its invariants.
    """
    return UserTimeline(
        user_id=str(user_id),
        scans=_sorted_unique(_check(scans, WifiScan)),
        fixes=_sorted_unique(_check(fixes, GpsFix)),
        activities=_sorted_unique(_check(activities, ActivitySample)),
    )


def slice_timeline(timeline: UserTimeline, t_start: float, t_end: float) -> UserTimeline:
    """Records with ``t_start <= timestamp < t_end``, order preserved."""
    if t_start > t_end:
        raise ValueError(f"t_start {t_start} is after t_end {t_end}")

    def keep(seq):
        return tuple(r for r in seq if t_start <= r.timestamp < t_end)

    return replace(
        timeline,
        scans=keep(timeline.scans),
        fixes=keep(timeline.fixes),
        activities=keep(timeline.activities),
    )

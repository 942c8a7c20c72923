"""Wi-Fi stability, GPS speeds and windowed feature records."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np

from .ingest import _decode_metadata, _open_text, format_float, write_metadata
from .trace import Activity, GpsFix, UserTimeline, WifiScan

EARTH_RADIUS_M = 6_371_000.0

DEFAULT_STABILITY_MAX_GAP_S = 1800.0
DEFAULT_SPEED_MAX_GAP_S = 900.0
DEFAULT_WINDOW_S = 600.0
DEFAULT_HOP_S = 300.0

FEATURE_COLUMNS = (
    "window_start",
    "window_end",
    "stability_mean",
    "stability_min",
    "ap_count_mean",
    "ap_count_std",
    "rssi_mean",
    "rssi_std",
    "speed",
    "speed_provenance",
    "label",
)

# Numeric inputs for the activity classifiers, in column order.
DEFAULT_CLASSIFIER_FEATURES = (
    "stability_mean",
    "stability_min",
    "ap_count_mean",
    "ap_count_std",
    "rssi_mean",
    "rssi_std",
    "speed",
)


class SpeedSource(str, Enum):
    REPORTED = "reported"
    DERIVED = "derived"


class SpeedProvenance(str, Enum):
    OBSERVED = "observed"
    IMPUTED = "imputed"
    ABSENT = "absent"


@dataclass(frozen=True)
class StabilitySample:
    t_mid: float
    coefficient: float | None
    gap: float


@dataclass(frozen=True)
class SpeedSample:
    t_mid: float
    speed: float
    source: SpeedSource


@dataclass(frozen=True)
class FeatureRecord:
    window_start: float
    window_end: float
    stability_mean: float | None = None
    stability_min: float | None = None
    ap_count_mean: float | None = None
    ap_count_std: float | None = None
    rssi_mean: float | None = None
    rssi_std: float | None = None
    speed: float | None = None
    speed_provenance: SpeedProvenance = SpeedProvenance.ABSENT
    label: Activity | None = None

    def __post_init__(self):
        if not self.window_start < self.window_end:
            raise ValueError(f"window_start {self.window_start} must precede window_end {self.window_end}")
        object.__setattr__(self, "speed_provenance", SpeedProvenance(self.speed_provenance))
        if (self.speed is None) != (self.speed_provenance is SpeedProvenance.ABSENT):
            raise ValueError("speed and speed_provenance disagree")
        if self.label is not None:
            object.__setattr__(self, "label", Activity(self.label))

    def vector(self, names: Sequence[str] = DEFAULT_CLASSIFIER_FEATURES) -> list[float]:
        """Numeric feature row; undefined values become NaN."""
        return [math.nan if getattr(self, n) is None else float(getattr(self, n)) for n in names]


def jaccard_stability(x: Iterable[str], y: Iterable[str]) -> float | None:
    """|X ∩ Y| / |X ∪ Y| for two AP-identity sets; None if both are empty."""
    x, y = set(x), set(y)
    union = len(x | y)
    if union == 0:
        return None
    return len(x & y) / union


def stability_series(
    scans: Sequence[WifiScan], max_gap_s: float = DEFAULT_STABILITY_MAX_GAP_S
) -> list[StabilitySample]:
    """Stability coefficient of each consecutive scan pair no more than ``max_gap_s`` apart."""
    out = []
    for a, b in zip(scans, scans[1:]):
        gap = b.timestamp - a.timestamp
        if gap <= 0 or gap > max_gap_s:
            continue
        out.append(
            StabilitySample(
                t_mid=(a.timestamp + b.timestamp) / 2,
                coefficient=jaccard_stability(a.ap_ids, b.ap_ids),
                gap=float(gap),
            )
        )
    return out


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters on a sphere of radius 6 371 km."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def speed_series(
    fixes: Sequence[GpsFix],
    max_gap_s: float = DEFAULT_SPEED_MAX_GAP_S,
    prefer_reported: bool = True,
) -> list[SpeedSample]:
    """Speed samples from a time-ordered fix sequence.

    With ``prefer_reported`` every fix carrying a reported speed yields a
    sample at its own timestamp, and only pairs in which some fix lacks a
    reported speed are differenced. Otherwise every pair within
    ``max_gap_s`` is differenced (haversine distance over elapsed time,
    stamped at the pair midpoint). Output is ordered by time.
    """
    out = []
    if prefer_reported:
        out.extend(
            SpeedSample(float(f.timestamp), float(f.reported_speed), SpeedSource.REPORTED)
            for f in fixes
            if f.reported_speed is not None
        )
    for a, b in zip(fixes, fixes[1:]):
        if prefer_reported and a.reported_speed is not None and b.reported_speed is not None:
            continue
        gap = b.timestamp - a.timestamp
        if gap <= 0 or gap > max_gap_s:
            continue
        d = haversine_m(a.latitude, a.longitude, b.latitude, b.longitude)
        out.append(SpeedSample((a.timestamp + b.timestamp) / 2, d / gap, SpeedSource.DERIVED))
    out.sort(key=lambda s: s.t_mid)
    return out


def majority_label(labels: Iterable[Activity]) -> Activity | None:
    """Most frequent label; ties go to the more mobile label. Unknown is ignored."""
    counts: dict[Activity, int] = {}
    for lab in labels:
        if lab is Activity.UNKNOWN:
            continue
        counts[lab] = counts.get(lab, 0) + 1
    if not counts:
        return None
    return max(counts, key=lambda lab: (counts[lab], lab.mobility))


def window_starts(t_first: float, t_last: float, window_s: float, hop_s: float) -> list[float]:
    """Hop-aligned window starts covering [t_first, t_last]."""
    k = math.floor(t_first / hop_s)
    starts = []
    while k * hop_s <= t_last:
        starts.append(k * hop_s)
        k += 1
    return starts


def _in_window(times: np.ndarray, lo: float, hi: float) -> slice:
    return slice(int(np.searchsorted(times, lo, "left")), int(np.searchsorted(times, hi, "left")))


def _clip_to(v: float, lo: float, hi: float) -> float:
    # Float summation can land a mean one ulp outside its samples' range.
    return min(max(v, lo), hi)


def windowed_features(
    timeline: UserTimeline,
    stability: Sequence[StabilitySample],
    speeds: Sequence[SpeedSample],
    window_s: float = DEFAULT_WINDOW_S,
    hop_s: float = DEFAULT_HOP_S,
    contiguous: bool = False,
) -> list[FeatureRecord]:
    """Aggregate samples over windows ``[k*hop, k*hop + window)``.

    Windows span the scan stream: the first starts at the hop boundary at or
    before the first scan and the last at or before the final scan, so an
    empty scan stream produces no windows. With ``contiguous=True`` a hop
    longer than the window (leaving uncovered gaps) is rejected.
    """
    if not window_s > 0 or not hop_s > 0:
        raise ValueError("window_s and hop_s must be positive")
    if contiguous and hop_s > window_s:
        raise ValueError(f"hop_s {hop_s} exceeds window_s {window_s}; windows would leave gaps")
    scans = timeline.scans
    if not scans:
        return []

    scan_t = np.array([s.timestamp for s in scans], dtype=float)
    ap_counts = np.array([len(s.observations) for s in scans], dtype=float)
    rssi_lists = [np.array([o.rssi for o in s.observations], dtype=float) for s in scans]
    stab_t = np.array([s.t_mid for s in stability], dtype=float)
    speed_t = np.array([s.t_mid for s in speeds], dtype=float)
    act_t = np.array([a.timestamp for a in timeline.activities], dtype=float)

    records = []
    for start in window_starts(scan_t[0], scan_t[-1], window_s, hop_s):
        end = start + window_s
        rec = {"window_start": float(start), "window_end": float(end)}

        coeffs = [s.coefficient for s in stability[_in_window(stab_t, start, end)] if s.coefficient is not None]
        if coeffs:
            c = np.array(coeffs)
            rec["stability_min"] = float(c.min())
            rec["stability_mean"] = _clip_to(float(c.mean()), c.min(), c.max())

        sl = _in_window(scan_t, start, end)
        counts = ap_counts[sl]
        if counts.size:
            rec["ap_count_mean"] = float(counts.mean())
            rec["ap_count_std"] = float(counts.std())
            rssi = np.concatenate(rssi_lists[sl]) if counts.sum() else np.empty(0)
            if rssi.size:
                rec["rssi_mean"] = _clip_to(float(rssi.mean()), rssi.min(), rssi.max())
                rec["rssi_std"] = float(rssi.std())

        sp = [s.speed for s in speeds[_in_window(speed_t, start, end)]]
        if sp:
            v = np.array(sp)
            rec["speed"] = _clip_to(float(v.mean()), v.min(), v.max())
            rec["speed_provenance"] = SpeedProvenance.OBSERVED

        acts = timeline.activities[_in_window(act_t, start, end)]
        rec["label"] = majority_label(a.label for a in acts)
        records.append(FeatureRecord(**rec))
    return records


def extract_features(
    timeline: UserTimeline,
    window_s: float = DEFAULT_WINDOW_S,
    hop_s: float = DEFAULT_HOP_S,
    stability_max_gap_s: float = DEFAULT_STABILITY_MAX_GAP_S,
    speed_max_gap_s: float = DEFAULT_SPEED_MAX_GAP_S,
    prefer_reported: bool = True,
) -> list[FeatureRecord]:
    """Stability series, speed series and windowing in one call."""
    stab = stability_series(timeline.scans, stability_max_gap_s)
    speeds = speed_series(timeline.fixes, speed_max_gap_s, prefer_reported)
    return windowed_features(timeline, stab, speeds, window_s, hop_s)


def missing_speed_fraction(records: Sequence[FeatureRecord]) -> float:
    if not records:
        return 0.0
    return sum(r.speed_provenance is SpeedProvenance.ABSENT for r in records) / len(records)


# -- canonical features file -------------------------------------------------


def write_features(fh: IO[str], records: Sequence[FeatureRecord], metadata=None, delimiter: str = ",") -> None:
    write_metadata(fh, metadata)
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(FEATURE_COLUMNS)
    for r in records:
        row = []
        for name in FEATURE_COLUMNS:
            v = getattr(r, name)
            if name == "speed_provenance":
                row.append(v.value)
            elif name == "label":
                row.append("" if v is None else v.value)
            else:
                row.append(format_float(v))
        w.writerow(row)


def read_features(source, delimiter: str = ",") -> tuple[list[FeatureRecord], dict]:
    """Read a features file; returns (records, metadata).

    Only the window bounds are required; absent columns read as undefined.
    ``metadata["columns"]`` lists the header.
    """
    with _open_text(source) as fh:
        meta, lines = {}, []
        for line in fh:
            if not lines and line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            lines.append(line)
    meta = _decode_metadata(meta)
    reader = csv.DictReader(lines, delimiter=delimiter)
    if reader.fieldnames is None:
        meta["columns"] = []
        return [], meta
    columns = [c.strip() for c in reader.fieldnames]
    reader.fieldnames = columns
    meta["columns"] = columns
    missing = [c for c in ("window_start", "window_end") if c not in columns]
    if missing:
        raise ValueError(f"features file lacks columns {missing}")
    records = []
    for n, row in enumerate(reader, start=1):
        kw = {}
        try:
            for name in FEATURE_COLUMNS:
                raw = (row.get(name) or "").strip()
                if name == "speed_provenance":
                    kw[name] = SpeedProvenance(raw or "absent")
                elif name == "label":
                    kw[name] = Activity(raw) if raw else None
                else:
                    kw[name] = float(raw) if raw else None
            if kw["speed"] is None:
                kw["speed_provenance"] = SpeedProvenance.ABSENT
            elif kw["speed_provenance"] is SpeedProvenance.ABSENT:
                kw["speed_provenance"] = SpeedProvenance.OBSERVED
            records.append(FeatureRecord(**kw))
        except ValueError as exc:
            raise ValueError(f"features row {n}: {exc}") from None
    return records, meta


def with_speed(record: FeatureRecord, speed: float | None, provenance: SpeedProvenance) -> FeatureRecord:
    return replace(record, speed=speed, speed_provenance=provenance)

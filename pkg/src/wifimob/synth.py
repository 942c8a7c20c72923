"""Synthetic labeled traces: a regime-switching pedestrian on an AP grid.

The agent alternates between stationary, walking and running segments of
exponential length, moving between uniformly drawn waypoints at a speed drawn
from the segment's regime range. RSSI follows a log-distance path-loss model
with Gaussian shadowing; APs weaker than the visibility floor are not
reported. The generator is the ground truth for the acceptance checks.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass, field
from typing import IO, Sequence

import numpy as np

from .features import EARTH_RADIUS_M, majority_label
from .ingest import format_float, write_activity, write_gps, write_metadata, write_wifi
from .trace import (
    LABELS,
    ActivitySample,
    ApObservation,
    GpsFix,
    Provider,
    UserTimeline,
    WifiScan,
    build_timeline,
)

CORPUS_FILES = {
    "wifi": "wifi.csv",
    "gps": "gps.csv",
    "activity": "activity.csv",
    "truth": "truth.csv",
}


@dataclass(frozen=True)
class SynthConfig:
    area_m: float = 5000.0
    ap_spacing_m: float = 40.0
    tx_power_dbm: float = -30.0
    path_loss_exponent: float = 3.0
    rssi_noise_std: float = 0.5
    visibility_floor_dbm: float = -90.0
    scan_period_s: int = 60
    gps_period_s: int = 600
    gps_dropout_prob: float = 0.0
    gps_noise_m: float = 3.0
    activity_period_s: int = 3
    stationary_mean_s: float = 1800.0
    walking_mean_s: float = 1200.0
    running_mean_s: float = 900.0
    stationary_speed: tuple[float, float] = (0.0, 0.1)
    walking_speed: tuple[float, float] = (0.5, 2.0)
    running_speed: tuple[float, float] = (2.5, 5.0)
    duration_s: int = 7200
    start_time: int = 0
    origin_lat: float = 43.7044
    origin_lon: float = -72.2887
    user_id: str = "synth"
    seed: int = 42

    def __post_init__(self):
        for name in ("scan_period_s", "gps_period_s", "activity_period_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("area_m", "ap_spacing_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.gps_dropout_prob <= 1.0:
            raise ValueError("gps_dropout_prob must lie in [0, 1]")
        if self.rssi_noise_std < 0 or self.gps_noise_m < 0:
            raise ValueError("noise levels must be non-negative")
        if self.duration_s < 0 or self.start_time < 0:
            raise ValueError("duration_s and start_time must be non-negative")
        if min(self.segment_means) < 0 or max(self.segment_means) <= 0:
            raise ValueError("segment mean durations must be >= 0 with at least one regime enabled")
        ranges = self.speed_ranges
        for lo, hi in ranges:
            if not 0 <= lo <= hi:
                raise ValueError(f"invalid speed range ({lo}, {hi})")
        for (_, hi), (lo, _) in zip(ranges, ranges[1:]):
            if not hi < lo:
                raise ValueError("regime speed ranges must be ordered and non-overlapping")
        object.__setattr__(self, "stationary_speed", tuple(self.stationary_speed))
        object.__setattr__(self, "walking_speed", tuple(self.walking_speed))
        object.__setattr__(self, "running_speed", tuple(self.running_speed))

    @property
    def segment_means(self) -> tuple[float, float, float]:
        return (self.stationary_mean_s, self.walking_mean_s, self.running_mean_s)

    @property
    def speed_ranges(self) -> tuple[tuple[float, float], ...]:
        return (tuple(self.stationary_speed), tuple(self.walking_speed), tuple(self.running_speed))

    @property
    def max_speed(self) -> float:
        return max(hi for _, hi in self.speed_ranges)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("stationary_speed", "walking_speed", "running_speed"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown synth settings: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Per-second truth: time, position (m), speed (m/s), regime index into LABELS."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    speed: np.ndarray
    regime: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.t)


def ap_grid(config: SynthConfig) -> tuple[list[str], np.ndarray, list[int]]:
    """AP identifiers, positions (n, 2) and carrier frequencies."""
    n = max(1, int(config.area_m // config.ap_spacing_m))
    coords = (np.arange(n) + 0.5) * config.ap_spacing_m
    gx, gy = np.meshgrid(coords, coords, indexing="ij")
    pos = np.column_stack([gx.ravel(), gy.ravel()])
    ids = [f"02:00:00:{(i >> 16) & 0xFF:02x}:{(i >> 8) & 0xFF:02x}:{i & 0xFF:02x}" for i in range(len(pos))]
    freqs = [2412 + 25 * (i % 3) if i % 2 == 0 else 5180 + 20 * (i % 4) for i in range(len(pos))]
    return ids, pos, freqs


def _simulate_motion(config: SynthConfig, rng: np.random.Generator, n_ticks: int):
    enabled = [i for i, m in enumerate(config.segment_means) if m > 0]
    area = config.area_m
    x = np.empty(n_ticks)
    y = np.empty(n_ticks)
    speed = np.empty(n_ticks)
    regime = np.empty(n_ticks, dtype=int)
    if n_ticks == 0:
        return x, y, speed, regime

    pos = rng.uniform(0, area, size=2)
    target = rng.uniform(0, area, size=2)
    current = enabled[int(rng.integers(len(enabled)))]
    seg_left = rng.exponential(config.segment_means[current])
    seg_speed = rng.uniform(*config.speed_ranges[current])
    for t in range(n_ticks):
        while seg_left <= 0:
            others = [r for r in enabled if r != current] or [current]
            current = others[int(rng.integers(len(others)))]
            seg_left += rng.exponential(config.segment_means[current])
            seg_speed = rng.uniform(*config.speed_ranges[current])
        x[t], y[t], speed[t], regime[t] = pos[0], pos[1], seg_speed, current
        # advance one second
        step = seg_speed
        delta = target - pos
        dist = math.hypot(delta[0], delta[1])
        if dist <= step:
            pos = target.copy()
            target = rng.uniform(0, area, size=2)
        else:
            pos = pos + delta * (step / dist)
        # reflective boundary
        for k in range(2):
            if pos[k] < 0:
                pos[k] = -pos[k]
            elif pos[k] > area:
                pos[k] = 2 * area - pos[k]
        seg_left -= 1.0
    return x, y, speed, regime


def _to_latlon(config: SynthConfig, x, y):
    lat0 = math.radians(config.origin_lat)
    lat = config.origin_lat + np.degrees(np.asarray(y) / EARTH_RADIUS_M)
    lon = config.origin_lon + np.degrees(np.asarray(x) / (EARTH_RADIUS_M * math.cos(lat0)))
    return lat, lon


def generate(config: SynthConfig = SynthConfig()) -> tuple[UserTimeline, GroundTruth]:
    """Simulate one user; deterministic for a given config (including seed)."""
    motion_ss, rssi_ss, gps_ss = np.random.SeedSequence(config.seed).spawn(3)
    n = int(config.duration_s)
    x, y, speed, regime = _simulate_motion(config, np.random.default_rng(motion_ss), n)
    t = config.start_time + np.arange(n)
    truth = GroundTruth(t=t, x=x, y=y, speed=speed, regime=regime)

    ids, ap_pos, freqs = ap_grid(config)
    rssi_rng = np.random.default_rng(rssi_ss)
    scans = []
    for i in range(0, n, config.scan_period_s):
        d = np.hypot(ap_pos[:, 0] - x[i], ap_pos[:, 1] - y[i])
        rssi = config.tx_power_dbm - 10 * config.path_loss_exponent * np.log10(np.maximum(d, 1.0))
        rssi = rssi + rssi_rng.normal(0.0, 1.0, size=len(d)) * config.rssi_noise_std
        rssi = np.clip(np.rint(rssi), -120, 0)
        seen = np.nonzero(rssi >= config.visibility_floor_dbm)[0]
        obs = tuple(ApObservation(ids[j], int(rssi[j]), freqs[j]) for j in seen)
        scans.append(WifiScan(int(t[i]), obs))

    gps_rng = np.random.default_rng(gps_ss)
    fixes = []
    idx = np.arange(0, n, config.gps_period_s)
    keep = gps_rng.random(len(idx)) >= config.gps_dropout_prob
    noise = gps_rng.normal(0.0, 1.0, size=(len(idx), 2)) * config.gps_noise_m
    lat, lon = _to_latlon(config, x[idx] + noise[:, 0], y[idx] + noise[:, 1])
    for j, i in enumerate(idx):
        if keep[j]:
            fixes.append(
                GpsFix(
                    int(t[i]),
                    round(float(lat[j]), 7),
                    round(float(lon[j]), 7),
                    accuracy=max(config.gps_noise_m, 1.0),
                    provider=Provider.GPS,
                )
            )

    activities = [
        ActivitySample(int(t[i]), LABELS[regime[i]]) for i in range(0, n, config.activity_period_s)
    ]
    return build_timeline(config.user_id, scans, fixes, activities), truth


def truth_labels_for_windows(truth: GroundTruth, windows: Sequence) -> list:
    """Majority true regime per window ``(start, end)`` or FeatureRecord.

    Ties go to the more mobile regime; windows without truth samples get None.
    """
    out = []
    for w in windows:
        start, end = (w.window_start, w.window_end) if hasattr(w, "window_start") else w
        lo, hi = np.searchsorted(truth.t, start, "left"), np.searchsorted(truth.t, end, "left")
        out.append(majority_label(LABELS[r] for r in truth.regime[lo:hi]))
    return out


def true_window_speed(truth: GroundTruth, windows: Sequence) -> list:
    """Mean true speed per window, None where the window has no truth samples."""
    out = []
    for w in windows:
        start, end = (w.window_start, w.window_end) if hasattr(w, "window_start") else w
        lo, hi = np.searchsorted(truth.t, start, "left"), np.searchsorted(truth.t, end, "left")
        out.append(float(truth.speed[lo:hi].mean()) if hi > lo else None)
    return out


# -- corpus files ---------------------------------------------------------------


def write_truth(fh: IO[str], truth: GroundTruth, metadata=None) -> None:
    write_metadata(fh, metadata)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["timestamp", "x", "y", "speed", "regime"])
    for i in range(len(truth)):
        w.writerow(
            [
                int(truth.t[i]),
                format_float(truth.x[i]),
                format_float(truth.y[i]),
                format_float(truth.speed[i]),
                LABELS[truth.regime[i]].value,
            ]
        )


def read_truth(path) -> GroundTruth:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    t, x, y, sp, rg = [], [], [], [], []
    index = {lab.value: i for i, lab in enumerate(LABELS)}
    for row in reader:
        t.append(int(row["timestamp"]))
        x.append(float(row["x"]))
        y.append(float(row["y"]))
        sp.append(float(row["speed"]))
        rg.append(index[row["regime"]])
    return GroundTruth(
        t=np.array(t, dtype=int),
        x=np.array(x),
        y=np.array(y),
        speed=np.array(sp),
        regime=np.array(rg, dtype=int),
    )


def write_corpus(out_dir, timeline: UserTimeline, truth: GroundTruth, metadata=None) -> dict[str, str]:
    """Write the three trace files plus ground truth; returns stream -> path."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, v) for k, v in CORPUS_FILES.items()}
    with open(paths["wifi"], "w", newline="", encoding="utf-8") as fh:
        write_wifi(fh, timeline.scans, metadata)
    with open(paths["gps"], "w", newline="", encoding="utf-8") as fh:
        write_gps(fh, timeline.fixes, metadata)
    with open(paths["activity"], "w", newline="", encoding="utf-8") as fh:
        write_activity(fh, timeline.activities, metadata)
    with open(paths["truth"], "w", newline="", encoding="utf-8") as fh:
        write_truth(fh, truth, metadata)
    return paths

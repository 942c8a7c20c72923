"""Delimiter-separated trace parsing, canonical writers and dataset filters.

Each stream (wifi, gps, activity) is one header-bearing text file. Leading
lines starting with ``#`` are metadata and are skipped by the parsers; the
canonical writers use them to embed a format version and the resolved run
configuration.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import IO, Iterator, Mapping, Sequence

from .trace import (
    Activity,
    ActivitySample,
    ApObservation,
    GpsFix,
    Provider,
    TraceError,
    UserTimeline,
    WifiScan,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

STREAM_FIELDS = {
    "wifi": {"required": ("timestamp", "ap_id", "rssi"), "optional": ("frequency",)},
    "gps": {
        "required": ("timestamp", "latitude", "longitude"),
        "optional": ("speed", "accuracy", "provider"),
    },
    "activity": {"required": ("timestamp", "label"), "optional": ()},
}

# Canonical column names written by the writers below.
CANONICAL_COLUMNS = {
    "wifi": {"timestamp": "timestamp", "ap_id": "ap_id", "rssi": "rssi", "frequency": "frequency"},
    "gps": {
        "timestamp": "timestamp",
        "latitude": "latitude",
        "longitude": "longitude",
        "speed": "speed",
        "accuracy": "accuracy",
        "provider": "provider",
    },
    "activity": {"timestamp": "timestamp", "label": "label_code"},
}

DEFAULT_CODE_TABLE: dict[int, Activity] = {
    0: Activity.STATIONARY,
    1: Activity.WALKING,
    2: Activity.RUNNING,
    3: Activity.UNKNOWN,
}


class IngestError(ValueError):
    """File-level failure: the file cannot be interpreted with the given mapping."""


@dataclass(frozen=True)
class ColumnMapping:
    """Logical field name -> source column (header name or 0-based index)."""

    stream: str
    columns: Mapping[str, str | int]

    def __post_init__(self):
        if self.stream not in STREAM_FIELDS:
            raise ValueError(f"unknown stream {self.stream!r}")
        spec = STREAM_FIELDS[self.stream]
        known = set(spec["required"]) | set(spec["optional"])
        unknown = set(self.columns) - known
        if unknown:
            raise ValueError(f"{self.stream}: unknown logical fields {sorted(unknown)}")
        missing = [f for f in spec["required"] if f not in self.columns]
        if missing:
            raise ValueError(f"{self.stream}: required fields not mapped: {missing}")
        sources = list(self.columns.values())
        if len(set(sources)) != len(sources):
            raise ValueError(f"{self.stream}: a source column is mapped more than once")
        object.__setattr__(self, "columns", dict(self.columns))

    @classmethod
    def canonical(cls, stream: str, header: Sequence[str] | None = None) -> "ColumnMapping":
        """Canonical names; optional fields only when present in ``header``."""
        spec = STREAM_FIELDS[stream]
        names = CANONICAL_COLUMNS[stream]
        cols = {f: names[f] for f in spec["required"]}
        for f in spec["optional"]:
            if header is None or names[f] in header:
                cols[f] = names[f]
        return cls(stream, cols)

    def resolve(self, header: Sequence[str]) -> dict[str, int]:
        """Map logical fields to column positions in ``header``."""
        out = {}
        for logical, source in self.columns.items():
            if isinstance(source, int):
                if not 0 <= source < len(header):
                    raise IngestError(
                        f"{self.stream}: column index {source} for {logical!r} out of range "
                        f"(header has {len(header)} columns)"
                    )
                out[logical] = source
            else:
                try:
                    out[logical] = list(header).index(source)
                except ValueError:
                    raise IngestError(
                        f"{self.stream}: header lacks column {source!r} mapped to {logical!r}; "
                        f"header is {list(header)}"
                    ) from None
        return out


@dataclass(frozen=True)
class FilterConfig:
    drop_cell_provider: bool = True
    max_accuracy_m: float | None = None
    drop_unknown_activity: bool = True

    def __post_init__(self):
        if self.max_accuracy_m is not None and not self.max_accuracy_m > 0:
            raise ValueError(f"max_accuracy_m must be > 0, got {self.max_accuracy_m}")


@dataclass
class ParseResult:
    """Parsed records plus row accounting.

    ``rows_parsed + skipped`` always equals the number of data rows read.
    """

    records: list
    rows_parsed: int = 0
    skipped: int = 0
    diagnostics: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


class _RowError(ValueError):
    pass


@contextmanager
def _open_text(source) -> Iterator[IO[str]]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            yield fh
    else:
        yield source


def _read_rows(source, mapping: ColumnMapping | None, stream: str, delimiter: str):
    """Yield (row_number, {logical: raw}) and fill metadata; resolves the header."""
    with _open_text(source) as fh:
        metadata = {}
        lines = iter(fh)
        header_line = None
        for line in lines:
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if sep:
                    metadata[key.strip()] = value.strip()
                continue
            if line.strip():
                header_line = line
                break
        if header_line is None:
            return metadata, None, []
        header = next(csv.reader([header_line], delimiter=delimiter))
        header = [h.strip() for h in header]
        if mapping is None:
            mapping = ColumnMapping.canonical(stream, header)
        elif mapping.stream != stream:
            raise ValueError(f"mapping is for stream {mapping.stream!r}, not {stream!r}")
        positions = mapping.resolve(header)
        rows = []
        for n, row in enumerate(csv.reader(lines, delimiter=delimiter), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            values = {
                logical: (row[pos].strip() if pos < len(row) else None)
                for logical, pos in positions.items()
            }
            rows.append((n, values))
        return metadata, header, rows


def _decode_metadata(raw: dict) -> dict:
    out = {}
    for k, v in raw.items():
        try:
            out[k] = json.loads(v)
        except ValueError:
            out[k] = v
    return out


def _required(values: dict, name: str) -> str:
    v = values.get(name)
    if v is None or v == "":
        raise _RowError(f"missing {name}")
    return v


def _optional(values: dict, name: str) -> str | None:
    v = values.get(name)
    return None if v is None or v == "" else v


def _float(raw: str, name: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise _RowError(f"{name} is not a number: {raw!r}") from None
    if not math.isfinite(v):
        raise _RowError(f"{name} is not finite: {raw!r}")
    return v


def _int(raw: str, name: str) -> int:
    v = _float(raw, name)
    if v != int(v):
        raise _RowError(f"{name} is not an integer: {raw!r}")
    return int(v)


def _parse(source, mapping, stream, delimiter, convert) -> ParseResult:
    metadata, header, rows = _read_rows(source, mapping, stream, delimiter)
    result = ParseResult(records=[], metadata=_decode_metadata(metadata))
    for n, values in rows:
        try:
            rec = convert(values)
        except (_RowError, TraceError) as exc:
            msg = f"{stream} row {n}: {exc}"
            result.skipped += 1
            result.diagnostics.append(msg)
            log.warning("skipped row", extra={"stream": stream, "row": n, "reason": str(exc)})
            continue
        result.rows_parsed += 1
        result.records.append(rec)
    return result


def parse_wifi(source, mapping: ColumnMapping | None = None, delimiter: str = ",") -> ParseResult:
    """Parse a wifi scan file into time-ordered WifiScan records.

    Rows sharing a timestamp form one scan. When an AP appears twice in one
    scan the strongest reading is kept.
    """

    def convert(v):
        t = _float(_required(v, "timestamp"), "timestamp")
        freq = _optional(v, "frequency")
        obs = ApObservation(
            ap_id=_required(v, "ap_id"),
            rssi=_int(_required(v, "rssi"), "rssi"),
            frequency=None if freq is None else _int(freq, "frequency"),
        )
        if t < 0:
            raise _RowError("timestamp must be non-negative")
        return int(t), obs

    result = _parse(source, mapping, "wifi", delimiter, convert)
    groups: dict[int, dict[str, ApObservation]] = {}
    for t, obs in result.records:
        scan = groups.setdefault(t, {})
        prev = scan.get(obs.ap_id)
        if prev is None or obs.rssi > prev.rssi:
            scan[obs.ap_id] = obs
    result.records = [WifiScan(t, tuple(groups[t].values())) for t in sorted(groups)]
    return result


def parse_gps(source, mapping: ColumnMapping | None = None, delimiter: str = ",") -> ParseResult:
    """Parse a location file into GpsFix records (file order, then sorted by time)."""

    def convert(v):
        speed = _optional(v, "speed")
        acc = _optional(v, "accuracy")
        prov = _optional(v, "provider")
        try:
            provider = Provider(prov.lower()) if prov is not None else Provider.GPS
        except ValueError:
            provider = Provider.OTHER
        return GpsFix(
            timestamp=_float(_required(v, "timestamp"), "timestamp"),
            latitude=_float(_required(v, "latitude"), "latitude"),
            longitude=_float(_required(v, "longitude"), "longitude"),
            reported_speed=None if speed is None else _float(speed, "speed"),
            accuracy=None if acc is None else _float(acc, "accuracy"),
            provider=provider,
        )

    result = _parse(source, mapping, "gps", delimiter, convert)
    result.records.sort(key=lambda f: f.timestamp)
    return result


def parse_activity(
    source,
    mapping: ColumnMapping | None = None,
    code_table: Mapping[int, Activity] | None = None,
    delimiter: str = ",",
) -> ParseResult:
    """Parse an activity-inference file; integer codes go through ``code_table``."""
    table = {int(k): Activity(v) for k, v in (code_table or DEFAULT_CODE_TABLE).items()}

    def convert(v):
        code = _int(_required(v, "label"), "label")
        if code not in table:
            raise _RowError(f"unknown activity code {code}")
        return ActivitySample(_float(_required(v, "timestamp"), "timestamp"), table[code])

    result = _parse(source, mapping, "activity", delimiter, convert)
    result.records.sort(key=lambda a: a.timestamp)
    return result


def apply_filters(timeline: UserTimeline, config: FilterConfig = FilterConfig()):
    """Drop inaccurate fixes and unknown activity samples.

    Returns ``(filtered_timeline, removed)`` where ``removed`` counts the
    dropped records per rule.
    """
    removed = {"cell_provider": 0, "accuracy": 0, "unknown_activity": 0}
    fixes = []
    for fix in timeline.fixes:
        if config.drop_cell_provider and fix.provider is Provider.CELL:
            removed["cell_provider"] += 1
        elif (
            config.max_accuracy_m is not None
            and fix.accuracy is not None
            and fix.accuracy > config.max_accuracy_m
        ):
            removed["accuracy"] += 1
        else:
            fixes.append(fix)
    activities = []
    for a in timeline.activities:
        if config.drop_unknown_activity and a.label is Activity.UNKNOWN:
            removed["unknown_activity"] += 1
        else:
            activities.append(a)
    return replace(timeline, fixes=tuple(fixes), activities=tuple(activities)), removed


# -- canonical writers -------------------------------------------------------


def format_float(v: float | None) -> str:
    """Shortest round-tripping text for a float; empty for None."""
    if v is None:
        return ""
    return repr(float(v))


def write_metadata(fh: IO[str], metadata: Mapping | None) -> None:
    fh.write(f"# format_version: {FORMAT_VERSION}\n")
    for key, value in (metadata or {}).items():
        fh.write(f"# {key}: {json.dumps(value, sort_keys=True, separators=(',', ':'))}\n")


def _writer(fh, delimiter):
    return csv.writer(fh, delimiter=delimiter, lineterminator="\n")


def write_wifi(fh: IO[str], scans: Sequence[WifiScan], metadata=None, delimiter: str = ",") -> None:
    write_metadata(fh, metadata)
    w = _writer(fh, delimiter)
    w.writerow(["timestamp", "ap_id", "rssi", "frequency"])
    for scan in scans:
        for o in scan.observations:
            w.writerow([scan.timestamp, o.ap_id, o.rssi, "" if o.frequency is None else o.frequency])


def write_gps(fh: IO[str], fixes: Sequence[GpsFix], metadata=None, delimiter: str = ",") -> None:
    write_metadata(fh, metadata)
    w = _writer(fh, delimiter)
    w.writerow(["timestamp", "latitude", "longitude", "speed", "accuracy", "provider"])
    for f in fixes:
        w.writerow(
            [
                f.timestamp,
                format_float(f.latitude),
                format_float(f.longitude),
                format_float(f.reported_speed),
                format_float(f.accuracy),
                f.provider.value,
            ]
        )


def write_activity(
    fh: IO[str],
    samples: Sequence[ActivitySample],
    metadata=None,
    code_table: Mapping[int, Activity] | None = None,
    delimiter: str = ",",
) -> None:
    table = code_table or DEFAULT_CODE_TABLE
    codes = {Activity(v): int(k) for k, v in table.items()}
    write_metadata(fh, metadata)
    w = _writer(fh, delimiter)
    w.writerow(["timestamp", "label_code"])
    for s in samples:
        w.writerow([s.timestamp, codes[s.label]])


def dumps(writer, records, **kwargs) -> str:
    """Run one of the writers into a string."""
    buf = io.StringIO()
    writer(buf, records, **kwargs)
    return buf.getvalue()

"""Versioned, checksummed JSON envelope shared by every model file."""

from __future__ import annotations

import hashlib
import json
from typing import Any

FORMAT = "wifimob-model"
VERSION = 1


class ModelFormatError(ValueError):
    pass


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, no whitespace, repr floats."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def checksum(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def dumps(kind: str, payload: dict, config: dict | None = None) -> str:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "payload": payload,
        "checksum": checksum(payload),
        "config": config or {},
    }
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads(text: str, kind: str | None = None) -> tuple[str, dict, dict]:
    """Parse and verify an envelope; returns (kind, payload, config)."""
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise ModelFormatError(f"not a JSON document: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError("not a wifimob model document")
    if doc.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    if kind is not None and doc.get("kind") != kind:
        raise ModelFormatError(f"expected a {kind!r} model, found {doc.get('kind')!r}")
    payload = doc.get("payload")
    if checksum(payload) != doc.get("checksum"):
        raise ModelFormatError("checksum mismatch; model file is corrupt or was edited")
    return doc["kind"], payload, doc.get("config", {})

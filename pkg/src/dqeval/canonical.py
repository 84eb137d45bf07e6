"""Canonical JSON emission and content fingerprints.

The stdlib encoder cannot serialize Decimal without precision loss, so this
module writes JSON itself: keys in insertion order (documents are built
deterministically), Decimals as plain number literals, timestamps in the
canonical RFC 3339 form. Identical inputs therefore produce byte-identical
documents.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime
from decimal import Decimal
from pathlib import Path

from .values import format_timestamp


def _emit(obj, out: list[str], indent: str, level: int) -> None:
    pad = indent * level
    inner = indent * (level + 1)
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, Decimal):
        if not obj.is_finite():
            raise ValueError(f"non-finite decimal {obj} cannot be serialized")
        out.append(str(obj))
    elif isinstance(obj, float):
        # floats are never produced by the pipeline; refuse silently lossy output
        raise TypeError("float values are not allowed in canonical documents")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, datetime):
        out.append(json.dumps(format_timestamp(obj)))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r}")
            out.append(inner)
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(": ")
            _emit(value, out, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(obj):
            out.append(inner)
            _emit(value, out, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Serialize to canonical JSON text (trailing newline included)."""
    out: list[str] = []
    _emit(obj, out, " " * indent, 0)
    out.append("\n")
    return "".join(out)


def loads(text: str):
    """Parse JSON keeping decimals exact (floats become Decimal)."""
    return json.loads(text, parse_float=Decimal)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def snapshot_fingerprint(directory: Path) -> str:
    """Content hash of a snapshot directory: per-file digests over sorted names."""
    directory = Path(directory)
    entries = sorted(p for p in directory.iterdir() if p.suffix == ".csv")
    h = hashlib.sha256()
    for p in entries:
        h.update(f"{p.name}:{sha256_file(p)}\n".encode("utf-8"))
    return h.hexdigest()

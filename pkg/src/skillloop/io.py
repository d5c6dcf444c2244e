"""Canonical JSON and atomic file helpers shared by every persisted artifact."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, no whitespace, ASCII-safe, stable floats."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_bytes_atomic(path: str | os.PathLike, data: bytes) -> str:
    """Write via a temp file + rename; returns the sha256 of ``data``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return sha256_bytes(data)


def write_json(path: str | os.PathLike, obj) -> str:
    return write_bytes_atomic(path, (dumps(obj) + "\n").encode("utf-8"))


def read_json(path: str | os.PathLike):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def config_hash(obj) -> str:
    return sha256_bytes(dumps(obj).encode("utf-8"))[:16]

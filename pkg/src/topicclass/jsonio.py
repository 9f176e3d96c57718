"""Canonical JSON serialization and content hashing shared by all file formats.

Every persisted artifact is written through :func:`canonical_json` so that
identical in-memory objects always produce byte-identical files, which in turn
makes content hashes stable across runs and platforms.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any


def canonical_json(obj: Any) -> str:
    """Serialize ``obj`` deterministically: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_text(text: str) -> str:
    return sha256_hex(text.encode("utf-8"))


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def derive_seed(base: int, *tags: object) -> int:
    """Derive a stable 63-bit sub-seed from a base seed and a tag sequence.

    Used to give each pipeline stage (and each held-out document) its own
    RNG stream that depends only on the base seed and the tag values, never
    on call order.
    """
    key = ":".join([str(int(base))] + [str(t) for t in tags])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def read_json(path: str | Path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)

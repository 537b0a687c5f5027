"""Canonical JSON encoding shared by every artifact that gets fingerprinted.

Sorted keys, compact separators, ASCII-only, one trailing newline. Byte
identity of re-serialized artifacts is a hard requirement, so every
persisted document must round through these two functions.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True) + "\n"


def fingerprint(obj: Any) -> str:
    return hashlib.sha256(canonical_dumps(obj).encode("utf-8")).hexdigest()

"""Canonical JSON helpers: full-precision floats, stable ordering, hashing.

Python's float repr is shortest-round-trip, so dumping and re-parsing any
finite double is bit-exact; non-finite values are rejected at the boundary.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any


class NonFiniteNumberError(ValueError):
    pass


def check_finite(obj: Any, path: str = "$") -> None:
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise NonFiniteNumberError(f"{path}: non-finite number {obj!r}")
    elif isinstance(obj, dict):
        for key, value in obj.items():
            check_finite(value, f"{path}.{key}")
    elif isinstance(obj, (list, tuple)):
        for i, value in enumerate(obj):
            check_finite(value, f"{path}[{i}]")


def canonical_dumps(obj: Any) -> str:
    """Compact JSON preserving the caller's field order."""
    check_finite(obj)
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def content_hash(obj: Any) -> str:
    """sha256 over a key-sorted canonical serialization."""
    check_finite(obj)
    data = json.dumps(obj, separators=(",", ":"), sort_keys=True, allow_nan=False)
    return hashlib.sha256(data.encode("utf-8")).hexdigest()

"""Seed derivation for named random streams.

All randomness in the harness flows from one 64-bit master seed. Per-episode
seeds and per-purpose sub-streams are derived with a splitmix64 finalizer
chain so that the mapping (master_seed, episode_index, stream name) -> stream
is stable, documented, and independent of draw order elsewhere.
"""

from __future__ import annotations

import random

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 step: advance by the golden gamma and finalize."""
    x = (x + _GOLDEN) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def mix64(*parts: int | str) -> int:
    """Fold integers and names into one 64-bit seed (order-sensitive)."""
    acc = 0
    for part in parts:
        value = _fnv1a64(part) if isinstance(part, str) else part & MASK64
        acc = splitmix64(acc ^ value)
    return acc


def episode_seed(master_seed: int, episode_index: int) -> int:
    return mix64(master_seed, episode_index)


def make_stream(*parts: int | str) -> random.Random:
    """A `random.Random` seeded from the mixed parts."""
    return random.Random(mix64(*parts))


def unit_vector_for_pair(id_a: int, id_b: int) -> tuple[float, float]:
    """Fixed deterministic unit vector for a pair of agent ids.

    Used to break the tie when two agent centers coincide exactly.
    """
    import math

    angle = (mix64(id_a & MASK64, id_b & MASK64) / float(1 << 64)) * 2.0 * math.pi
    return (math.cos(angle), math.sin(angle))

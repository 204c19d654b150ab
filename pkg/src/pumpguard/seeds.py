"""Deterministic seed derivation for pipeline stages.

Every randomized stage draws from its own RNG seeded by a value derived
from the master seed and the stage's name, so stages stay independent and
the whole pipeline is reproducible from a single integer.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, *scope: str | int) -> int:
    """Derive a stable 32-bit seed for a named scope from the master seed."""
    material = ":".join(str(part) for part in (master, *scope)).encode()
    return int.from_bytes(hashlib.sha256(material).digest()[:4], "big")

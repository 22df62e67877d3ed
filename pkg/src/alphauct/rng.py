"""Deterministic per-call RNG derivation.

Every stochastic component draws from a generator derived from a logical call
key (ints and short strings) instead of sharing mutable stream state.  Call
keys are assigned when work is scheduled, not when it runs, so serial and
thread-parallel execution produce bit-identical draws.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _part_to_int(part) -> int:
    if isinstance(part, (bool,)):
        raise TypeError("bool is not a valid rng key part")
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, str):
        digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"rng key parts must be int or str, got {type(part).__name__}")


def derive_rng(*parts) -> np.random.Generator:
    """Independent generator for a logical call key; same key, same stream."""
    if not parts:
        raise ValueError("empty rng key")
    entropy = [_part_to_int(p) for p in parts]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

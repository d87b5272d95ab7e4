"""Deterministic seed splitting.

All randomness in the package flows from a single 64-bit seed through the
functions here.  Child streams are derived by mixing the parent seed with a
stable hash of string labels, so independent subtasks get independent,
reproducible generators regardless of call order.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One step of the splitmix64 sequence: returns (next_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a label string, 64-bit."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK
    return h


def child_seed(seed: int, *labels: object) -> int:
    """Derive a child seed from a parent seed and a label path."""
    state = seed & _MASK
    state, out = splitmix64(state)
    for label in labels:
        state = (out ^ fnv1a64(str(label))) & _MASK
        state, out = splitmix64(state)
    return out


def generator(seed: int, *labels: object) -> np.random.Generator:
    """A numpy Generator seeded deterministically from (seed, labels)."""
    return np.random.Generator(np.random.PCG64(child_seed(seed, *labels)))

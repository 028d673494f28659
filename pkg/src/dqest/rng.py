"""Seed derivation helpers.

All stochastic steps draw from generators seeded through `derive_seed`, so a
single master seed pins every simulation output regardless of execution order
or process count.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF


def derive_seed(*parts: object) -> int:
    """Map a tuple of labels/indices to a stable 64-bit seed.

    The parts are joined into a text key and hashed; unrelated keys give
    independent streams while identical keys always give the same one.
    """
    key = "::".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf8")).digest()
    return int.from_bytes(digest[:8], "little")


def spawn(*parts: object) -> np.random.Generator:
    """Return a numpy Generator seeded from `derive_seed(*parts)`."""
    return np.random.default_rng(derive_seed(*parts))


def as_rng(rng: np.random.Generator | int) -> np.random.Generator:
    """Accept either a Generator or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return (new_state, output).

    Reference implementation shared by the compiled and pure kernels so both
    backends consume randomness identically.
    """
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, (z ^ (z >> 31)) & MASK64

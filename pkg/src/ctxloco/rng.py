"""Portable deterministic random streams.

SplitMix64 is used wherever bit-reproducibility across platforms (and
across the compiled / pure-Python kernels) matters: terrain sampling and
in-episode sensor noise. It is a fixed, published algorithm with a 64-bit
state, so the same seed yields the same stream everywhere.
"""

from __future__ import annotations

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; returns (new_state, output)."""
    state = (state + _GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    z = z ^ (z >> 31)
    return state, z


def u64_to_unit(z: int) -> float:
    """Map a 64-bit word to a double in [0, 1)."""
    return (z >> 11) * _INV_2_53


def mix64(*values: int) -> int:
    """Fold integers into one well-scrambled 64-bit value (for sub-seeds)."""
    acc = 0x8C5FB1FD51D0D3D5
    for v in values:
        acc ^= v & _MASK64
        _, acc = splitmix64_next(acc)
    return acc


class RandomStream:
    """Stateful SplitMix64 stream of uniform doubles."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_unit(self) -> float:
        self._state, z = splitmix64_next(self._state)
        return u64_to_unit(z)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.next_unit()

"""Deterministic per-participant picture ordering.

Reproducibility across processes, platforms, and reimplementations matters
here: a participant must always see the same permutation. Everything is
pinned to named public algorithms with pure 64-bit integer arithmetic:

* seed = FNV-1a 64-bit hash of ``"<experiment_id>|<participant_id>"`` (UTF-8);
* PRNG = SplitMix64 over that seed;
* shuffle = Fisher-Yates, iterating i from n-1 down to 1 with
  ``j = next_u64() % (i + 1)``.

The modulo reduction biases permutations by at most n / 2**64, far below
anything a uniformity test can see for realistic picture counts.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

T = TypeVar("T")

_MASK64 = (1 << 64) - 1

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


def fnv1a_64(data: bytes) -> int:
    """FNV-1a 64-bit hash (xor the byte, then multiply by the FNV prime)."""
    h = FNV64_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


class SplitMix64:
    """SplitMix64 PRNG (Steele, Lea & Flood), 64-bit output per step."""

    __slots__ = ("_state",)

    GAMMA = 0x9E3779B97F4A7C15

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + self.GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, bound: int) -> int:
        """Uniform-ish integer in [0, bound) via modulo reduction."""
        return self.next_u64() % bound


def ordering_seed(experiment_id: str, participant_id: str) -> int:
    return fnv1a_64(f"{experiment_id}|{participant_id}".encode("utf-8"))


def deterministic_shuffle(items: Sequence[T], seed: int) -> list[T]:
    """Fisher-Yates permutation of ``items`` driven by SplitMix64(seed)."""
    out = list(items)
    rng = SplitMix64(seed)
    for i in range(len(out) - 1, 0, -1):
        j = rng.next_below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def participant_order(experiment_id: str, participant_id: str, picture_ids: Sequence[T]) -> list[T]:
    """The permutation a given participant sees for a given experiment."""
    return deterministic_shuffle(picture_ids, ordering_seed(experiment_id, participant_id))

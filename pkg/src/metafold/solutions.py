"""Candidate-solution representations and their canonical serialization.

Three closed representations: bit vectors, permutations, and real vectors.
The JSON serialization here is the wire/digest canonical form used by both
the RPC tier and tabu digests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Tuple, Union


class SolutionFormatError(Exception):
    """Serialized solution text violates the representation invariants."""


@dataclass(frozen=True)
class BitVector:
    bits: Tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 1 or any(b not in (0, 1) for b in self.bits):
            raise ValueError("bits must be a nonempty 0/1 sequence")

    @staticmethod
    def of(bits) -> "BitVector":
        return BitVector(tuple(int(b) for b in bits))

    @staticmethod
    def from_string(text: str) -> "BitVector":
        return BitVector.of(int(c) for c in text)

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class Permutation:
    order: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("not a permutation of 0..n-1")

    @staticmethod
    def of(order) -> "Permutation":
        return Permutation(tuple(int(i) for i in order))

    def __len__(self):
        return len(self.order)


@dataclass(frozen=True)
class RealVector:
    coords: Tuple[float, ...]

    def __post_init__(self):
        if any(not math.isfinite(c) for c in self.coords):
            raise ValueError("coordinates must be finite")

    @staticmethod
    def of(coords) -> "RealVector":
        return RealVector(tuple(float(c) for c in coords))

    def __len__(self):
        return len(self.coords)


Solution = Union[BitVector, Permutation, RealVector]

REPRESENTATION_TAGS = ("bits", "perm", "real")


def representation_of(sol: Solution) -> str:
    if isinstance(sol, BitVector):
        return "bits"
    if isinstance(sol, Permutation):
        return "perm"
    if isinstance(sol, RealVector):
        return "real"
    raise TypeError(f"not a solution: {type(sol).__name__}")


def solution_to_json(sol: Solution) -> dict:
    tag = representation_of(sol)
    if tag == "bits":
        return {"t": "bits", "v": "".join(str(b) for b in sol.bits)}
    if tag == "perm":
        return {"t": "perm", "v": list(sol.order)}
    return {"t": "real", "v": list(sol.coords)}


def serialize_solution(sol: Solution) -> str:
    return json.dumps(solution_to_json(sol), sort_keys=True, separators=(",", ":"))


def solution_from_json(obj: dict) -> Solution:
    try:
        tag, payload = obj["t"], obj["v"]
    except (TypeError, KeyError) as exc:
        raise SolutionFormatError(f"malformed solution object: {obj!r}") from exc
    try:
        if tag == "bits":
            return BitVector.from_string(payload)
        if tag == "perm":
            return Permutation.of(payload)
        if tag == "real":
            return RealVector.of(payload)
    except (ValueError, TypeError) as exc:
        raise SolutionFormatError(str(exc)) from exc
    raise SolutionFormatError(f"unknown representation tag: {tag!r}")


def deserialize_solution(text: str, representation: str) -> Solution:
    obj = json.loads(text)
    if obj.get("t") != representation:
        raise SolutionFormatError(
            f"expected representation {representation!r}, got {obj.get('t')!r}"
        )
    return solution_from_json(obj)


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def solution_digest(sol: Solution) -> int:
    """Stable 64-bit FNV-1a over the canonical serialization."""
    h = _FNV_OFFSET
    for byte in serialize_solution(sol).encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h

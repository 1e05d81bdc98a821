"""Threaded-environment substrate.

Everything a search component needs beyond the candidate solution lives in
an immutable `Environment`: typed, namespaced entries plus a counter-based
RNG stream. Components never touch hidden state; each step takes an
Environment and returns a (possibly) new one, so whole runs replay
deterministically from a seed.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Tuple

_TOKEN_RE = re.compile(r"^[A-Za-z0-9_]+$")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class ConfigurationError(Exception):
    """A component's environment-key requirement was not satisfied."""


class ComponentContractError(Exception):
    """A component received input violating its stated preconditions."""


@dataclass(frozen=True, order=True)
class EnvKey:
    """Namespaced address of one Environment entry, rendered "namespace.name"."""

    namespace: str
    name: str

    def __post_init__(self):
        for token in (self.namespace, self.name):
            if not _TOKEN_RE.match(token):
                raise ValueError(f"invalid env key token: {token!r}")

    def render(self) -> str:
        return f"{self.namespace}.{self.name}"

    @staticmethod
    def parse(text: str) -> "EnvKey":
        ns, _, name = text.partition(".")
        return EnvKey(ns, name)


VALUE_TAGS = ("int", "real", "bool", "text", "rseq", "iseq", "dseq", "sol")


@dataclass(frozen=True)
class EnvValue:
    """Closed tagged union of storable values.

    Sequences are kept as tuples so values are hashable and safely
    shareable. `dseq` holds 64-bit solution digests (tabu lists); `sol`
    holds an opaque serialized solution.
    """

    tag: str
    value: Any

    def __post_init__(self):
        if self.tag not in VALUE_TAGS:
            raise ValueError(f"unknown EnvValue tag: {self.tag!r}")

    @staticmethod
    def of_int(x: int) -> "EnvValue":
        return EnvValue("int", int(x))

    @staticmethod
    def of_real(x: float) -> "EnvValue":
        return EnvValue("real", float(x))

    @staticmethod
    def of_bool(x: bool) -> "EnvValue":
        return EnvValue("bool", bool(x))

    @staticmethod
    def of_text(x: str) -> "EnvValue":
        return EnvValue("text", str(x))

    @staticmethod
    def of_rseq(xs) -> "EnvValue":
        return EnvValue("rseq", tuple(float(x) for x in xs))

    @staticmethod
    def of_iseq(xs) -> "EnvValue":
        return EnvValue("iseq", tuple(int(x) for x in xs))

    @staticmethod
    def of_dseq(xs) -> "EnvValue":
        return EnvValue("dseq", tuple(int(x) & _MASK64 for x in xs))

    @staticmethod
    def of_sol(text: str) -> "EnvValue":
        return EnvValue("sol", str(text))

    def to_json(self) -> dict:
        if self.tag == "dseq":
            payload: Any = [str(d) for d in self.value]
        elif self.tag in ("rseq", "iseq"):
            payload = list(self.value)
        else:
            payload = self.value
        return {"t": self.tag, "v": payload}

    @staticmethod
    def from_json(obj: dict) -> "EnvValue":
        tag, payload = obj["t"], obj["v"]
        if tag == "int":
            return EnvValue.of_int(payload)
        if tag == "real":
            return EnvValue.of_real(payload)
        if tag == "bool":
            return EnvValue.of_bool(payload)
        if tag == "text":
            return EnvValue.of_text(payload)
        if tag == "rseq":
            return EnvValue.of_rseq(payload)
        if tag == "iseq":
            return EnvValue.of_iseq(payload)
        if tag == "dseq":
            return EnvValue.of_dseq(int(d) for d in payload)
        if tag == "sol":
            return EnvValue.of_sol(payload)
        raise ValueError(f"unknown EnvValue tag: {tag!r}")


@dataclass(frozen=True)
class RngState:
    """Counter-based generator state; each draw is a pure function of (seed, counter)."""

    seed: int
    counter: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.counter <= _MASK64):
            raise ValueError("seed and counter must be 64-bit unsigned")


def _mix64(x: int) -> int:
    # splitmix64 finalizer
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _raw64(seed: int, counter: int) -> int:
    return _mix64((seed + (counter + 1) * _GOLDEN) & _MASK64)


@dataclass(frozen=True)
class Environment:
    """Immutable key-value store plus the RNG stream.

    All mutators return a fresh Environment; equality is determined by
    (entries, rng) alone.
    """

    entries: Mapping[EnvKey, EnvValue]
    rng: RngState

    def get(self, key: EnvKey) -> Optional[EnvValue]:
        return self.entries.get(key)

    def put(self, key: EnvKey, value: EnvValue) -> "Environment":
        new_entries = dict(self.entries)
        new_entries[key] = value
        return dataclasses.replace(self, entries=new_entries)

    def __eq__(self, other):
        if not isinstance(other, Environment):
            return NotImplemented
        return dict(self.entries) == dict(other.entries) and self.rng == other.rng

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> dict:
        return {
            "rng": {"seed": str(self.rng.seed), "counter": str(self.rng.counter)},
            "entries": {k.render(): v.to_json() for k, v in self.entries.items()},
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(obj: dict) -> "Environment":
        rng = RngState(int(obj["rng"]["seed"]), int(obj["rng"]["counter"]))
        entries = {
            EnvKey.parse(k): EnvValue.from_json(v) for k, v in obj["entries"].items()
        }
        return Environment(entries=entries, rng=rng)

    @staticmethod
    def deserialize(text: str) -> "Environment":
        return Environment.from_json(json.loads(text))


def env_new(seed: int) -> Environment:
    return Environment(entries={}, rng=RngState(seed, 0))


def rng_uniform(env: Environment) -> Tuple[float, Environment]:
    """One uniform draw in [0, 1); advances the counter by exactly 1."""
    raw = _raw64(env.rng.seed, env.rng.counter)
    value = (raw >> 11) * (2.0 ** -53)
    nxt = dataclasses.replace(
        env, rng=RngState(env.rng.seed, env.rng.counter + 1)
    )
    return value, nxt


def rng_below(env: Environment, n: int) -> Tuple[int, Environment]:
    """Unbiased integer in [0, n) via rejection over the raw 64-bit draw."""
    if n < 1:
        raise ValueError("rng_below requires n >= 1")
    limit = (1 << 64) - ((1 << 64) % n)
    counter = env.rng.counter
    while True:
        raw = _raw64(env.rng.seed, counter)
        counter += 1
        if raw < limit:
            nxt = dataclasses.replace(env, rng=RngState(env.rng.seed, counter))
            return raw % n, nxt


Step = Callable[[Any, Environment], Tuple[Any, Environment]]


def step_then(a: Step, b: Step) -> Step:
    """Left-to-right composition threading the Environment between stages."""

    def composed(x, env):
        mid, env = a(x, env)
        return b(mid, env)

    return composed


def step_identity(x, env):
    return x, env

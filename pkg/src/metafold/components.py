"""Component palette: perturbation, acceptance, termination, evaluation.

Every component is a pure Step plus a machine-readable descriptor of its
parameters and environment-key dependencies. The descriptor is what makes
the configuration space derivable: a component reads only its declared
`requires` keys (plus framework keys) and writes only its `provides` keys.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Tuple

from .env import (
    ComponentContractError,
    ConfigurationError,
    EnvKey,
    EnvValue,
    Environment,
    rng_below,
    rng_uniform,
)
from .solutions import (
    BitVector,
    Permutation,
    RealVector,
    Solution,
    solution_digest,
)

# Keys the framework templates maintain and every component may read.
K_ITERATION = EnvKey("framework", "iteration")
K_EVALUATIONS = EnvKey("framework", "evaluations")
K_INCUMBENT_VALUE = EnvKey("framework", "incumbent_value")
K_INCOMING_VALUE = EnvKey("framework", "incoming_value")
K_BEST_VALUE = EnvKey("framework", "best_value")
FRAMEWORK_KEYS = frozenset(
    {K_ITERATION, K_EVALUATIONS, K_INCUMBENT_VALUE, K_INCOMING_VALUE, K_BEST_VALUE}
)

K_TEMPERATURE = EnvKey("sa", "temperature")
K_TABU_LIST = EnvKey("tabu", "list")
K_BOUNDS = EnvKey("problem", "bounds")

KINDS = ("perturb", "accept", "terminate", "evaluate", "initializer")


@dataclass(frozen=True)
class Param:
    name: str
    type: str  # "int" | "real"
    default: Any
    min: Optional[float] = None
    max: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "type": self.type,
            "default": self.default,
            "min": self.min,
            "max": self.max,
        }

    @staticmethod
    def from_json(obj: dict) -> "Param":
        return Param(obj["name"], obj["type"], obj["default"], obj.get("min"), obj.get("max"))


@dataclass(frozen=True)
class ComponentDescriptor:
    name: str
    kind: str
    params: Tuple[Param, ...] = ()
    requires: frozenset = frozenset()
    provides: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown component kind: {self.kind!r}")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "params": [p.to_json() for p in self.params],
            "requires": sorted(k.render() for k in self.requires),
            "provides": sorted(k.render() for k in self.provides),
        }

    @staticmethod
    def from_json(obj: dict) -> "ComponentDescriptor":
        return ComponentDescriptor(
            name=obj["name"],
            kind=obj["kind"],
            params=tuple(Param.from_json(p) for p in obj["params"]),
            requires=frozenset(EnvKey.parse(k) for k in obj["requires"]),
            provides=frozenset(EnvKey.parse(k) for k in obj["provides"]),
        )


@dataclass(frozen=True)
class Component:
    """A pure Step bundled with its descriptor."""

    descriptor: ComponentDescriptor
    step: Callable[[Any, Environment], Tuple[Any, Environment]]

    def __call__(self, x, env):
        return self.step(x, env)


def descriptor_of(component: Component) -> ComponentDescriptor:
    return component.descriptor


def _require_real(env: Environment, key: EnvKey, who: str) -> float:
    v = env.get(key)
    if v is None or v.tag != "real":
        raise ConfigurationError(f"{who}: missing real env key {key.render()}")
    return v.value


# ---------------------------------------------------------------------------
# Perturbation


def perturb_bitflip(k: int = 1) -> Component:
    """Flip k distinct uniformly chosen bits."""
    if k < 1:
        raise ValueError("k must be positive")

    def step(sol, env):
        if not isinstance(sol, BitVector):
            raise ComponentContractError("bitflip: expected a bit vector")
        n = len(sol)
        if k > n:
            raise ComponentContractError(f"bitflip: k={k} exceeds length {n}")
        chosen = set()
        while len(chosen) < k:
            idx, env = rng_below(env, n)
            chosen.add(idx)
        bits = tuple(b ^ 1 if i in chosen else b for i, b in enumerate(sol.bits))
        return BitVector(bits), env

    desc = ComponentDescriptor(
        name="bitflip",
        kind="perturb",
        params=(Param("k", "int", k, min=1),),
    )
    return Component(desc, step)


def perturb_swap() -> Component:
    """Exchange two distinct positions of a permutation."""

    def step(sol, env):
        if not isinstance(sol, Permutation):
            raise ComponentContractError("swap: expected a permutation")
        n = len(sol)
        if n < 2:
            raise ComponentContractError("swap: permutation length must be >= 2")
        i, env = rng_below(env, n)
        j, env = rng_below(env, n - 1)
        if j >= i:
            j += 1
        order = list(sol.order)
        order[i], order[j] = order[j], order[i]
        return Permutation(tuple(order)), env

    return Component(ComponentDescriptor("swap", "perturb"), step)


def perturb_two_opt() -> Component:
    """Reverse the segment between two distinct cut points i < j (inclusive)."""

    def step(sol, env):
        if not isinstance(sol, Permutation):
            raise ComponentContractError("two_opt: expected a permutation")
        n = len(sol)
        if n < 2:
            raise ComponentContractError("two_opt: permutation length must be >= 2")
        i, env = rng_below(env, n)
        j, env = rng_below(env, n - 1)
        if j >= i:
            j += 1
        if i > j:
            i, j = j, i
        order = list(sol.order)
        order[i : j + 1] = reversed(order[i : j + 1])
        return Permutation(tuple(order)), env

    return Component(ComponentDescriptor("two_opt", "perturb"), step)


def _box_muller_pairs(env: Environment, count: int):
    """Yield `count` standard normals; two uniform draws per pair, odd tail
    uses two draws and discards the second variate."""
    out = []
    while len(out) < count:
        u1, env = rng_uniform(env)
        u2, env = rng_uniform(env)
        r = math.sqrt(-2.0 * math.log(1.0 - u1))  # 1-u1 avoids log(0)
        out.append(r * math.cos(2.0 * math.pi * u2))
        if len(out) < count:
            out.append(r * math.sin(2.0 * math.pi * u2))
    return out[:count], env


def perturb_gaussian(sigma: float) -> Component:
    """Add N(0, sigma^2) noise per coordinate; clamps to problem.bounds when set."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")

    def step(sol, env):
        if not isinstance(sol, RealVector):
            raise ComponentContractError("gaussian: expected a real vector")
        zs, env = _box_muller_pairs(env, len(sol))
        coords = [c + sigma * z for c, z in zip(sol.coords, zs)]
        bounds = env.get(K_BOUNDS)
        if bounds is not None and bounds.tag == "rseq" and len(bounds.value) == 2:
            lo, hi = bounds.value
            coords = [min(max(c, lo), hi) for c in coords]
        return RealVector(tuple(coords)), env

    desc = ComponentDescriptor(
        name="gaussian",
        kind="perturb",
        params=(Param("sigma", "real", sigma, min=0.0),),
        requires=frozenset({K_BOUNDS}),
    )
    return Component(desc, step)


# ---------------------------------------------------------------------------
# Acceptance


def _framework_values(env: Environment, who: str) -> Tuple[float, float]:
    return (
        _require_real(env, K_INCUMBENT_VALUE, who),
        _require_real(env, K_INCOMING_VALUE, who),
    )


def accept_improving() -> Component:
    """Accept incoming iff its value is <= the incumbent's (plateau walks allowed)."""

    def step(pair, env):
        incumbent, incoming = pair
        incumbent_value, incoming_value = _framework_values(env, "improving")
        return (incoming if incoming_value <= incumbent_value else incumbent), env

    desc = ComponentDescriptor(
        name="improving",
        kind="accept",
        requires=frozenset({K_INCUMBENT_VALUE, K_INCOMING_VALUE}),
    )
    return Component(desc, step)


def accept_metropolis(cooling: float) -> Component:
    """Metropolis rule with geometrically cooled sa.temperature.

    Improving moves accept without drawing; temperature 0 rejects worsening
    moves without drawing (no randomness consumed in either case).
    """
    if not (0.0 < cooling <= 1.0):
        raise ValueError("cooling must be in (0, 1]")

    def step(pair, env):
        incumbent, incoming = pair
        incumbent_value, incoming_value = _framework_values(env, "metropolis")
        temperature = _require_real(env, K_TEMPERATURE, "metropolis")
        delta = incoming_value - incumbent_value
        if delta <= 0:
            chosen = incoming
        elif temperature == 0.0:
            chosen = incumbent
        else:
            u, env = rng_uniform(env)
            chosen = incoming if u < math.exp(-delta / temperature) else incumbent
        env = env.put(K_TEMPERATURE, EnvValue.of_real(temperature * cooling))
        return chosen, env

    desc = ComponentDescriptor(
        name="metropolis",
        kind="accept",
        params=(Param("cooling", "real", cooling, min=0.0, max=1.0),),
        requires=frozenset({K_TEMPERATURE, K_INCUMBENT_VALUE, K_INCOMING_VALUE}),
        provides=frozenset({K_TEMPERATURE}),
    )
    return Component(desc, step)


def accept_tabu(tenure: int) -> Component:
    """Reject solutions whose digest is among the last `tenure` acceptances."""
    if tenure < 1:
        raise ValueError("tenure must be positive")

    def step(pair, env):
        incumbent, incoming = pair
        stored = env.get(K_TABU_LIST)
        tabu = tuple(stored.value) if stored is not None and stored.tag == "dseq" else ()
        digest = solution_digest(incoming)
        if digest in tabu:
            return incumbent, env
        updated = (tabu + (digest,))[-tenure:]
        env = env.put(K_TABU_LIST, EnvValue.of_dseq(updated))
        return incoming, env

    desc = ComponentDescriptor(
        name="tabu",
        kind="accept",
        params=(Param("tenure", "int", tenure, min=1),),
        requires=frozenset({K_TABU_LIST}),
        provides=frozenset({K_TABU_LIST}),
    )
    return Component(desc, step)


# ---------------------------------------------------------------------------
# Termination


def _require_counter(env: Environment, key: EnvKey, who: str) -> int:
    v = env.get(key)
    if v is None or v.tag != "int":
        raise ConfigurationError(f"{who}: missing int env key {key.render()}")
    return v.value


def terminate_iterations(max_iterations: int) -> Component:
    if max_iterations < 0:
        raise ValueError("max_iterations must be nonnegative")

    def step(sol, env):
        it = _require_counter(env, K_ITERATION, "max_iterations")
        return it >= max_iterations, env

    desc = ComponentDescriptor(
        name="max_iterations",
        kind="terminate",
        params=(Param("max", "int", max_iterations, min=0),),
        requires=frozenset({K_ITERATION}),
    )
    return Component(desc, step)


def terminate_evaluations(max_evaluations: int) -> Component:
    if max_evaluations < 0:
        raise ValueError("max_evaluations must be nonnegative")

    def step(sol, env):
        evals = _require_counter(env, K_EVALUATIONS, "max_evaluations")
        return evals >= max_evaluations, env

    desc = ComponentDescriptor(
        name="max_evaluations",
        kind="terminate",
        params=(Param("max", "int", max_evaluations, min=0),),
        requires=frozenset({K_EVALUATIONS}),
    )
    return Component(desc, step)


def terminate_target(target: float) -> Component:
    def step(sol, env):
        best = _require_real(env, K_BEST_VALUE, "target_value")
        return best <= target, env

    desc = ComponentDescriptor(
        name="target_value",
        kind="terminate",
        params=(Param("target", "real", target),),
        requires=frozenset({K_BEST_VALUE}),
    )
    return Component(desc, step)


# ---------------------------------------------------------------------------
# Initializers


def initializer(name: str, key: EnvKey, value: EnvValue) -> Component:
    """A Step that writes one env key before the search loop starts."""

    def step(x, env):
        return x, env.put(key, value)

    desc = ComponentDescriptor(
        name=name, kind="initializer", provides=frozenset({key})
    )
    return Component(desc, step)

"""Component registry and automated design-space enumeration.

Configurations are derived, not hand-written: a spec is valid exactly when
every component's required environment keys are covered by the framework,
the initializers, or some other bound component's provides. Enumeration is
the validated Cartesian product over slot candidates and parameter grids,
in a deterministic order so configuration ids are stable everywhere.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .components import (
    Component,
    ComponentDescriptor,
    FRAMEWORK_KEYS,
    K_BOUNDS,
)
from .env import EnvKey, EnvValue, Environment, env_new
from .frameworks import (
    InnerSearch,
    RunResult,
    crossover_for,
    genetic_algorithm,
    iterated_local_search,
    local_search,
)
from .problems import ProblemInstance


class RegistrationError(Exception):
    pass


class UnknownComponentError(Exception):
    pass


class InvalidConfigurationError(Exception):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# slot name -> component kind, per framework template
FRAMEWORK_SLOTS: Dict[str, Tuple[Tuple[str, str], ...]] = {
    "local_search": (
        ("perturb", "perturb"),
        ("accept", "accept"),
        ("terminate", "terminate"),
    ),
    "ils": (
        ("kick", "perturb"),
        ("inner_perturb", "perturb"),
        ("inner_accept", "accept"),
        ("inner_terminate", "terminate"),
        ("outer_accept", "accept"),
        ("terminate", "terminate"),
    ),
    "ga": (
        ("mutate", "perturb"),
        ("terminate", "terminate"),
    ),
}


@dataclass(frozen=True)
class Registry:
    descriptors: Dict[Tuple[str, str], ComponentDescriptor] = field(default_factory=dict)
    factories: Dict[Tuple[str, str], Callable[[Dict], Component]] = field(default_factory=dict)
    impls: Dict[Tuple[str, str], str] = field(default_factory=dict)  # name of backing implementation

    def lookup(self, kind: str, name: str) -> ComponentDescriptor:
        try:
            return self.descriptors[(kind, name)]
        except KeyError:
            raise UnknownComponentError(f"no {kind} component named {name!r}")

    def build(self, kind: str, name: str, bindings: Dict) -> Component:
        self.lookup(kind, name)
        return self.factories[(kind, name)](bindings)

    def of_kind(self, kind: str) -> List[ComponentDescriptor]:
        return sorted(
            (d for (k, _), d in self.descriptors.items() if k == kind),
            key=lambda d: d.name,
        )

    def to_json(self) -> dict:
        descs = sorted(self.descriptors.values(), key=lambda d: (d.kind, d.name))
        return {"components": [d.to_json() for d in descs]}


def register(reg: Registry, descriptor: ComponentDescriptor, factory, impl: Optional[str] = None) -> Registry:
    key = (descriptor.kind, descriptor.name)
    if key in reg.descriptors:
        raise RegistrationError(f"duplicate component {key}")
    descriptors = dict(reg.descriptors)
    factories = dict(reg.factories)
    impls = dict(reg.impls)
    descriptors[key] = descriptor
    factories[key] = factory
    if impl is not None:
        impls[key] = impl
    return Registry(descriptors, factories, impls)


@dataclass(frozen=True)
class ConfigurationSpec:
    framework: str
    slots: Tuple[Tuple[str, str, Tuple[Tuple[str, object], ...]], ...]
    # each slot entry: (slot name, component name, ((param, value), ...))
    initializers: Tuple[Tuple[EnvKey, EnvValue], ...] = ()
    framework_params: Tuple[Tuple[str, object], ...] = ()

    @staticmethod
    def make(framework, slots: Dict[str, Tuple[str, Dict]], initializers=(), framework_params=()):
        slot_entries = tuple(
            (slot, name, tuple(sorted(bindings.items())))
            for slot, (name, bindings) in sorted(slots.items())
        )
        return ConfigurationSpec(
            framework=framework,
            slots=slot_entries,
            initializers=tuple(initializers),
            framework_params=tuple(sorted(dict(framework_params).items())),
        )

    def slot_map(self) -> Dict[str, Tuple[str, Dict]]:
        return {slot: (name, dict(bindings)) for slot, name, bindings in self.slots}

    def to_json(self) -> dict:
        return {
            "framework": self.framework,
            "slots": {
                slot: {"component": name, "params": dict(bindings)}
                for slot, name, bindings in self.slots
            },
            "initializers": [
                {"key": k.render(), "value": v.to_json()} for k, v in self.initializers
            ],
            "framework_params": dict(self.framework_params),
        }

    @staticmethod
    def from_json(obj: dict) -> "ConfigurationSpec":
        slots = {
            slot: (entry["component"], dict(entry.get("params", {})))
            for slot, entry in obj["slots"].items()
        }
        initializers = tuple(
            (EnvKey.parse(e["key"]), EnvValue.from_json(e["value"]))
            for e in obj.get("initializers", [])
        )
        return ConfigurationSpec.make(
            obj["framework"], slots, initializers, obj.get("framework_params", {})
        )

    def serialize(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()[:16]


def _check_bounds(desc: ComponentDescriptor, bindings: Dict) -> List[str]:
    problems = []
    known = {p.name: p for p in desc.params}
    for pname, value in bindings.items():
        p = known.get(pname)
        if p is None:
            problems.append(f"{desc.name}: unknown parameter {pname!r}")
            continue
        if p.min is not None and value < p.min:
            problems.append(f"{desc.name}.{pname}={value} below minimum {p.min}")
        if p.max is not None and value > p.max:
            problems.append(f"{desc.name}.{pname}={value} above maximum {p.max}")
    return problems


def validate(spec: ConfigurationSpec, reg: Registry) -> List[str]:
    """Return a list of violations; empty means valid.

    A key provided only by the requiring component itself (read-modify-write)
    does not satisfy that component's own initial read.
    """
    if spec.framework not in FRAMEWORK_SLOTS:
        raise UnknownComponentError(f"unknown framework {spec.framework!r}")
    slot_kinds = dict(FRAMEWORK_SLOTS[spec.framework])
    slot_map = spec.slot_map()
    violations: List[str] = []
    bound = []  # (slot, descriptor)
    for slot, kind in slot_kinds.items():
        if slot not in slot_map:
            violations.append(f"slot {slot!r} is unbound")
            continue
        name, bindings = slot_map[slot]
        desc = reg.lookup(kind, name)  # raises UnknownComponentError
        violations.extend(_check_bounds(desc, bindings))
        bound.append((slot, desc))
    for slot in slot_map:
        if slot not in slot_kinds:
            violations.append(f"slot {slot!r} is not part of framework {spec.framework}")
    initializer_keys = {k for k, _ in spec.initializers}
    for slot, desc in bound:
        others = frozenset().union(
            *(d.provides for s, d in bound if s != slot), frozenset()
        )
        available = FRAMEWORK_KEYS | initializer_keys | others
        for key in sorted(desc.requires):
            if key == K_BOUNDS:
                continue  # optional problem metadata, satisfied at instantiation
            if key not in available:
                violations.append(
                    f"{desc.name} (slot {slot}) requires unsatisfied key {key.render()}"
                )
    return violations


def enumerate_valid(
    reg: Registry,
    framework: str,
    param_grids: Dict[str, Dict[str, Sequence]],
    initializers: Sequence[Tuple[EnvKey, EnvValue]] = (),
    framework_params: Dict = (),
) -> List[ConfigurationSpec]:
    """All valid configurations, ordered lexicographically by component
    names then grid indices."""
    if framework not in FRAMEWORK_SLOTS:
        raise UnknownComponentError(f"unknown framework {framework!r}")
    slots = FRAMEWORK_SLOTS[framework]
    per_slot = []
    for slot, kind in slots:
        candidates = reg.of_kind(kind)
        if not candidates:
            raise RegistrationError(f"no registered components of kind {kind!r}")
        options = []
        for desc in candidates:
            grids = param_grids.get(desc.name, {})
            value_lists = [
                list(grids.get(p.name, [p.default])) for p in desc.params
            ]
            for combo in itertools.product(*value_lists):
                options.append((desc.name, dict(zip((p.name for p in desc.params), combo))))
        per_slot.append(options)
    specs = []
    for assignment in itertools.product(*per_slot):
        spec = ConfigurationSpec.make(
            framework,
            {slot: choice for (slot, _), choice in zip(slots, assignment)},
            initializers=initializers,
            framework_params=framework_params,
        )
        if not validate(spec, reg):
            specs.append(spec)
    return specs


def instantiate(
    spec: ConfigurationSpec,
    reg: Registry,
    problem: ProblemInstance,
    seed: int,
    extra_terminate: Optional[Component] = None,
) -> Callable[[], RunResult]:
    """Build a runnable closure; refuses to run invalid specs.

    `extra_terminate` lets the harness impose budget caps on top of the
    configuration's own termination condition.
    """
    violations = validate(spec, reg)
    if violations:
        raise InvalidConfigurationError(violations)
    slot_kinds = dict(FRAMEWORK_SLOTS[spec.framework])
    parts = {
        slot: reg.build(slot_kinds[slot], name, bindings)
        for slot, (name, bindings) in spec.slot_map().items()
    }
    if extra_terminate is not None:
        from .frameworks import terminate_any

        parts["terminate"] = terminate_any(parts["terminate"], extra_terminate)
    fw_params = dict(spec.framework_params)

    def run() -> RunResult:
        env = env_new(seed)
        bounds = problem.metadata.get("bounds")
        if bounds is not None:
            env = env.put(K_BOUNDS, EnvValue.of_rseq(bounds))
        for key, value in spec.initializers:
            env = env.put(key, value)
        if spec.framework == "ga":
            return genetic_algorithm(
                int(fw_params.get("pop_size", 20)),
                problem.sample_initial,
                problem.evaluate,
                int(fw_params.get("tournament_size", 2)),
                crossover_for(problem.representation),
                parts["mutate"],
                parts["terminate"],
                env,
            )
        start, env = problem.sample_initial(env)
        if spec.framework == "local_search":
            return local_search(
                start,
                problem.evaluate,
                parts["perturb"],
                parts["accept"],
                parts["terminate"],
                env,
            )
        if spec.framework == "ils":
            inner = InnerSearch(
                parts["inner_perturb"], parts["inner_accept"], parts["inner_terminate"]
            )
            return iterated_local_search(
                start,
                problem.evaluate,
                parts["kick"],
                inner,
                parts["outer_accept"],
                parts["terminate"],
                env,
            )
        raise UnknownComponentError(f"unknown framework {spec.framework!r}")

    return run

"""Built-in component palette and registry (de)serialization.

A registry file lists named components, each bound to one of the built-in
implementations with optional default parameter overrides; descriptors are
regenerated on load, so serialization round-trips.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Dict

from . import components as c
from .assembly import Registry, register
from .components import Component, ComponentDescriptor

# impl name -> (kind, constructor taking a bindings dict)
BUILTIN_IMPLS = {
    "bitflip": ("perturb", lambda p: c.perturb_bitflip(int(p.get("k", 1)))),
    "swap": ("perturb", lambda p: c.perturb_swap()),
    "two_opt": ("perturb", lambda p: c.perturb_two_opt()),
    "gaussian": ("perturb", lambda p: c.perturb_gaussian(float(p.get("sigma", 0.1)))),
    "improving": ("accept", lambda p: c.accept_improving()),
    "metropolis": ("accept", lambda p: c.accept_metropolis(float(p.get("cooling", 0.99)))),
    "tabu": ("accept", lambda p: c.accept_tabu(int(p.get("tenure", 5)))),
    "max_iterations": ("terminate", lambda p: c.terminate_iterations(int(p.get("max", 1000)))),
    "max_evaluations": ("terminate", lambda p: c.terminate_evaluations(int(p.get("max", 1000)))),
    "target_value": ("terminate", lambda p: c.terminate_target(float(p.get("target", 0.0)))),
}


def _descriptor_for(impl: str, name: str, defaults: Dict) -> ComponentDescriptor:
    kind, ctor = BUILTIN_IMPLS[impl]
    base = ctor(defaults).descriptor
    params = tuple(
        dataclasses.replace(p, default=defaults.get(p.name, p.default))
        for p in base.params
    )
    return dataclasses.replace(base, name=name, params=params)


def _factory_for(impl: str, defaults: Dict):
    _, ctor = BUILTIN_IMPLS[impl]

    def factory(bindings: Dict) -> Component:
        merged = dict(defaults)
        merged.update(bindings)
        return ctor(merged)

    return factory


def add_builtin(reg: Registry, impl: str, name: str = None, defaults: Dict = None) -> Registry:
    """Register a built-in implementation under `name` with default params."""
    if impl not in BUILTIN_IMPLS:
        raise KeyError(f"unknown built-in implementation {impl!r}")
    defaults = dict(defaults or {})
    name = name or impl
    desc = _descriptor_for(impl, name, defaults)
    return register(reg, desc, _factory_for(impl, defaults), impl=impl)


def default_registry() -> Registry:
    reg = Registry()
    for impl in BUILTIN_IMPLS:
        reg = add_builtin(reg, impl)
    return reg


def registry_to_json(reg: Registry) -> dict:
    out = []
    for (kind, name), desc in sorted(reg.descriptors.items()):
        impl = reg.impls.get((kind, name), name)
        out.append(
            {
                "name": name,
                "impl": impl,
                "defaults": {p.name: p.default for p in desc.params},
            }
        )
    return {"components": out}


def registry_from_json(obj: dict) -> Registry:
    reg = Registry()
    for entry in obj["components"]:
        reg = add_builtin(
            reg, entry["impl"], entry.get("name", entry["impl"]), entry.get("defaults", {})
        )
    return reg


def load_registry(path: str) -> Registry:
    with open(path) as fh:
        return registry_from_json(json.load(fh))

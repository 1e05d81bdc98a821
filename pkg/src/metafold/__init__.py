"""Composable metaheuristics: pure state-threaded components, automated
assembly, white-box problem dispatch, and a stateless RPC tier."""

from .env import (
    ComponentContractError,
    ConfigurationError,
    EnvKey,
    EnvValue,
    Environment,
    RngState,
    env_new,
    rng_below,
    rng_uniform,
    step_then,
)
from .solutions import (
    BitVector,
    Permutation,
    RealVector,
    deserialize_solution,
    serialize_solution,
    solution_digest,
)
from .components import (
    Component,
    ComponentDescriptor,
    accept_improving,
    accept_metropolis,
    accept_tabu,
    descriptor_of,
    perturb_bitflip,
    perturb_gaussian,
    perturb_swap,
    perturb_two_opt,
    terminate_evaluations,
    terminate_iterations,
    terminate_target,
)
from .problems import (
    ProblemInstance,
    checkerboard,
    hiff,
    magic_square,
    onemax,
    parse_dimacs_cnf,
    parse_tsplib,
    royal_road,
    sphere,
    trap,
)
from .frameworks import (
    InnerSearch,
    RunResult,
    genetic_algorithm,
    iterated_local_search,
    local_search,
    simulated_annealing_preset,
)
from .assembly import (
    ConfigurationSpec,
    Registry,
    enumerate_valid,
    instantiate,
    register,
    validate,
)
from .palette import default_registry

__all__ = [
    "BitVector",
    "Component",
    "ComponentContractError",
    "ComponentDescriptor",
    "ConfigurationError",
    "ConfigurationSpec",
    "EnvKey",
    "EnvValue",
    "Environment",
    "InnerSearch",
    "Permutation",
    "ProblemInstance",
    "RealVector",
    "Registry",
    "RngState",
    "RunResult",
    "accept_improving",
    "accept_metropolis",
    "accept_tabu",
    "checkerboard",
    "default_registry",
    "descriptor_of",
    "deserialize_solution",
    "enumerate_valid",
    "env_new",
    "genetic_algorithm",
    "hiff",
    "instantiate",
    "iterated_local_search",
    "local_search",
    "magic_square",
    "onemax",
    "parse_dimacs_cnf",
    "parse_tsplib",
    "perturb_bitflip",
    "perturb_gaussian",
    "perturb_swap",
    "perturb_two_opt",
    "register",
    "rng_below",
    "rng_uniform",
    "royal_road",
    "serialize_solution",
    "simulated_annealing_preset",
    "solution_digest",
    "sphere",
    "step_then",
    "terminate_evaluations",
    "terminate_iterations",
    "terminate_target",
    "trap",
    "validate",
]

"""Algorithm templates as higher-order compositions of components.

Each template threads one Environment lineage through every component call
and maintains the framework counters (iteration, evaluations, best value)
that components may read. Templates return the best-so-far solution, not
merely the final incumbent, since acceptance rules like Metropolis or tabu
may walk away from the best.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from .components import (
    Component,
    K_BEST_VALUE,
    K_EVALUATIONS,
    K_INCOMING_VALUE,
    K_INCUMBENT_VALUE,
    K_ITERATION,
    K_TEMPERATURE,
    accept_metropolis,
    initializer,
)
from .env import EnvValue, Environment, rng_below, rng_uniform
from .solutions import BitVector, Permutation, RealVector, Solution


@dataclass(frozen=True)
class RunResult:
    best: Solution
    best_value: float
    final_env: Environment
    trace: Tuple[Tuple[int, int, float], ...]  # (iteration, evaluations, best_value)


def _publish(env, iteration, evaluations, best_value):
    env = env.put(K_ITERATION, EnvValue.of_int(iteration))
    env = env.put(K_EVALUATIONS, EnvValue.of_int(evaluations))
    return env.put(K_BEST_VALUE, EnvValue.of_real(best_value))


def _publish_pair(env, incumbent_value, incoming_value):
    env = env.put(K_INCUMBENT_VALUE, EnvValue.of_real(incumbent_value))
    return env.put(K_INCOMING_VALUE, EnvValue.of_real(incoming_value))


def local_search(
    incumbent: Solution,
    evaluate: Component,
    perturb: Component,
    accept: Component,
    terminate: Component,
    env: Environment,
) -> RunResult:
    """Core loop: while not finished, perturb the incumbent, publish both
    objective values, and let the acceptance rule pick the survivor."""
    value, env = evaluate(incumbent, env)
    iteration, evaluations = 0, 1
    best, best_value = incumbent, value
    env = _publish(env, iteration, evaluations, best_value)
    trace = []
    while True:
        done, env = terminate(incumbent, env)
        if done:
            break
        incoming, env = perturb(incumbent, env)
        incoming_value, env = evaluate(incoming, env)
        evaluations += 1
        env = _publish_pair(env, value, incoming_value)
        chosen, env = accept((incumbent, incoming), env)
        if chosen == incoming:
            incumbent, value = incoming, incoming_value
        else:
            incumbent = chosen
        iteration += 1
        if value < best_value:
            best, best_value = incumbent, value
        env = _publish(env, iteration, evaluations, best_value)
        trace.append((iteration, evaluations, best_value))
    return RunResult(best, best_value, env, tuple(trace))


def simulated_annealing_preset(t0: float, cooling: float):
    """Initializer writing sa.temperature plus a Metropolis acceptance."""
    if t0 < 0:
        raise ValueError("t0 must be nonnegative")
    init = initializer("sa_init", K_TEMPERATURE, EnvValue.of_real(t0))
    return init, accept_metropolis(cooling)


@dataclass(frozen=True)
class InnerSearch:
    """One local-search descent configuration used inside ILS."""

    perturb: Component
    accept: Component
    terminate: Component


def iterated_local_search(
    start: Solution,
    evaluate: Component,
    kick: Component,
    inner: InnerSearch,
    outer_accept: Component,
    terminate: Component,
    env: Environment,
) -> RunResult:
    """Kick the current solution, descend with the inner search, then apply
    the outer acceptance. Counters and trace live at outer granularity."""
    value, env = evaluate(start, env)
    iteration, evaluations = 0, 1
    current, current_value = start, value
    best, best_value = start, value
    env = _publish(env, iteration, evaluations, best_value)
    trace = []
    while True:
        done, env = terminate(current, env)
        if done:
            break
        kicked, env = kick(current, env)
        inner_result = local_search(
            kicked, evaluate, inner.perturb, inner.accept, inner.terminate, env
        )
        env = inner_result.final_env
        evaluations += len(inner_result.trace) + 1  # inner evals: initial + 1/iter
        candidate, candidate_value = inner_result.best, inner_result.best_value
        env = _publish_pair(env, current_value, candidate_value)
        chosen, env = outer_accept((current, candidate), env)
        if chosen == candidate:
            current, current_value = candidate, candidate_value
        iteration += 1
        if current_value < best_value:
            best, best_value = current, current_value
        env = _publish(env, iteration, evaluations, best_value)
        trace.append((iteration, evaluations, best_value))
    return RunResult(best, best_value, env, tuple(trace))


# ---------------------------------------------------------------------------
# Genetic algorithm


def crossover_one_point():
    """Bit-vector one-point crossover at a cut in 1..n-1."""

    def step(pair, env):
        a, b = pair
        n = len(a)
        cut, env = rng_below(env, n - 1)
        cut += 1
        c1 = BitVector(a.bits[:cut] + b.bits[cut:])
        c2 = BitVector(b.bits[:cut] + a.bits[cut:])
        return (c1, c2), env

    return step


def crossover_order1():
    """Order-1 permutation crossover over a random segment."""

    def step(pair, env):
        a, b = pair
        n = len(a)
        i, env = rng_below(env, n)
        j, env = rng_below(env, n - 1)
        if j >= i:
            j += 1
        if i > j:
            i, j = j, i

        def child(keep, fill):
            segment = keep.order[i : j + 1]
            held = set(segment)
            rest = [g for g in fill.order if g not in held]
            out = rest[:i] + list(segment) + rest[i:]
            return Permutation(tuple(out))

        return (child(a, b), child(b, a)), env

    return step


def crossover_blend():
    """Real-vector blend: per coordinate, children are the two convex mixes
    with a fresh uniform weight."""

    def step(pair, env):
        a, b = pair
        c1, c2 = [], []
        for x, y in zip(a.coords, b.coords):
            u, env = rng_uniform(env)
            c1.append(u * x + (1 - u) * y)
            c2.append(u * y + (1 - u) * x)
        return (RealVector(tuple(c1)), RealVector(tuple(c2))), env

    return step


def crossover_for(representation: str):
    if representation == "bits":
        return crossover_one_point()
    if representation == "perm":
        return crossover_order1()
    if representation == "real":
        return crossover_blend()
    raise ValueError(f"no crossover for representation {representation!r}")


def genetic_algorithm(
    pop_size: int,
    init: Callable[[Environment], Tuple[Solution, Environment]],
    evaluate: Component,
    tournament_size: int,
    crossover,
    mutate: Component,
    terminate: Component,
    env: Environment,
) -> RunResult:
    """Generational GA with size-t tournaments and elitism of 1."""
    if pop_size < 2 or pop_size % 2 != 0:
        raise ValueError("pop_size must be even and positive")
    if tournament_size < 1:
        raise ValueError("tournament_size must be positive")

    population = []
    for _ in range(pop_size):
        sol, env = init(env)
        population.append(sol)
    values = []
    for sol in population:
        v, env = evaluate(sol, env)
        values.append(v)
    evaluations = pop_size
    generation = 0
    best_idx = min(range(pop_size), key=lambda i: values[i])
    best, best_value = population[best_idx], values[best_idx]
    env = _publish(env, generation, evaluations, best_value)
    trace = []

    def tournament(env):
        # ties go to the first-drawn contestant for replay determinism
        winner = None
        winner_value = None
        for _ in range(tournament_size):
            idx, env = rng_below(env, pop_size)
            if winner is None or values[idx] < winner_value:
                winner, winner_value = idx, values[idx]
        return winner, env

    while True:
        done, env = terminate(best, env)
        if done:
            break
        children = []
        for _ in range(pop_size // 2):
            p1, env = tournament(env)
            p2, env = tournament(env)
            (c1, c2), env = crossover((population[p1], population[p2]), env)
            c1, env = mutate(c1, env)
            c2, env = mutate(c2, env)
            children.extend((c1, c2))
        child_values = []
        for child in children:
            v, env = evaluate(child, env)
            child_values.append(v)
        evaluations += pop_size
        # elitism of 1: the best-so-far replaces the worst child verbatim
        worst = max(range(pop_size), key=lambda i: child_values[i])
        children[worst], child_values[worst] = best, best_value
        population, values = children, child_values
        generation += 1
        gen_best = min(range(pop_size), key=lambda i: values[i])
        if values[gen_best] < best_value:
            best, best_value = population[gen_best], values[gen_best]
        env = _publish(env, generation, evaluations, best_value)
        trace.append((generation, evaluations, best_value))
    return RunResult(best, best_value, env, tuple(trace))


def terminate_any(*terminates: Component) -> Component:
    """True as soon as any constituent condition is true (budget caps)."""
    from .components import ComponentDescriptor

    requires = frozenset().union(*(t.descriptor.requires for t in terminates))

    def step(sol, env):
        for t in terminates:
            done, env = t(sol, env)
            if done:
                return True, env
        return False, env

    desc = ComponentDescriptor("any_of", "terminate", requires=requires)
    return Component(desc, step)

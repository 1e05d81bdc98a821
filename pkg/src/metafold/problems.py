"""Benchmark problems: evaluators, instance parsers, initial-solution samplers.

All objectives are minimized with known optimum 0 where stated. Evaluators
are plain components; samplers draw exclusively from the threaded RNG so
initial solutions replay from the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

from .components import Component, ComponentDescriptor
from .env import ComponentContractError, Environment, rng_below, rng_uniform
from .solutions import BitVector, Permutation, RealVector, Solution


class ParseError(Exception):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    representation: str  # "bits" | "perm" | "real"
    evaluate: Component
    sample_initial: Callable[[Environment], Tuple[Solution, Environment]]
    metadata: Dict = field(default_factory=dict)


def _evaluator(name: str, expected, fn) -> Component:
    def step(sol, env):
        if not isinstance(sol, expected):
            raise ComponentContractError(
                f"{name}: expected {expected.__name__}, got {type(sol).__name__}"
            )
        return float(fn(sol)), env

    return Component(ComponentDescriptor(name, "evaluate"), step)


def sample_bits(n: int):
    def sample(env):
        bits = []
        for _ in range(n):
            b, env = rng_below(env, 2)
            bits.append(b)
        return BitVector(tuple(bits)), env

    return sample


def sample_permutation(n: int):
    # Fisher-Yates, descending index order.
    def sample(env):
        order = list(range(n))
        for i in range(n - 1, 0, -1):
            j, env = rng_below(env, i + 1)
            order[i], order[j] = order[j], order[i]
        return Permutation(tuple(order)), env

    return sample


def sample_box(d: int, lo: float, hi: float):
    def sample(env):
        coords = []
        for _ in range(d):
            u, env = rng_uniform(env)
            coords.append(lo + u * (hi - lo))
        return RealVector(tuple(coords)), env

    return sample


# ---------------------------------------------------------------------------
# Bit-vector problems


def onemax(n: int) -> ProblemInstance:
    if n < 1:
        raise ValueError("n must be >= 1")
    return ProblemInstance(
        name=f"onemax_{n}",
        representation="bits",
        evaluate=_evaluator("onemax", BitVector, lambda s: n - sum(s.bits)),
        sample_initial=sample_bits(n),
        metadata={"n": n, "optimum_value": 0.0},
    )


def checkerboard(s: int) -> ProblemInstance:
    """s*s grid, row-major; counts equal-valued horizontally/vertically
    adjacent pairs. Optimum 0 at either perfect checkerboard."""
    if s < 2:
        raise ValueError("s must be >= 2")
    n = s * s

    def value(sol: BitVector) -> int:
        if len(sol) != n:
            raise ComponentContractError(
                f"checkerboard: expected {n} bits, got {len(sol)}"
            )
        g = sol.bits
        equal = 0
        for r in range(s):
            for c in range(s):
                if c + 1 < s and g[r * s + c] == g[r * s + c + 1]:
                    equal += 1
                if r + 1 < s and g[r * s + c] == g[(r + 1) * s + c]:
                    equal += 1
        return equal

    return ProblemInstance(
        name=f"checkerboard_{s}",
        representation="bits",
        evaluate=_evaluator("checkerboard", BitVector, value),
        sample_initial=sample_bits(n),
        metadata={"n": n, "s": s, "optimum_value": 0.0},
    )


def royal_road(n: int, b: int) -> ProblemInstance:
    """Objective n - b * (number of all-ones blocks); optimum 0 at all-ones."""
    if b < 1 or n % b != 0:
        raise ValueError("b must divide n")

    def value(sol: BitVector) -> int:
        complete = sum(
            1
            for i in range(0, n, b)
            if all(sol.bits[i : i + b])
        )
        return n - b * complete

    return ProblemInstance(
        name=f"royal_road_{n}_{b}",
        representation="bits",
        evaluate=_evaluator("royal_road", BitVector, value),
        sample_initial=sample_bits(n),
        metadata={"n": n, "b": b, "optimum_value": 0.0},
    )


def trap(n: int, b: int) -> ProblemInstance:
    """Deceptive trap: per-block score is b for all-ones, else b-1-ones;
    objective sums b - score per block, so optimum 0 at all-ones and the
    deceptive cliff sits next to it."""
    if b < 1 or n % b != 0:
        raise ValueError("b must divide n")

    def value(sol: BitVector) -> int:
        total = 0
        for i in range(0, n, b):
            ones = sum(sol.bits[i : i + b])
            score = b if ones == b else (b - 1 - ones)
            total += b - score
        return total

    return ProblemInstance(
        name=f"trap_{n}_{b}",
        representation="bits",
        evaluate=_evaluator("trap", BitVector, value),
        sample_initial=sample_bits(n),
        metadata={"n": n, "b": b, "optimum_value": 0.0},
    )


def hiff(n: int) -> ProblemInstance:
    """Hierarchical if-and-only-if. f rewards homogeneous aligned blocks of
    size 2^l with 2^l at every level; objective = n*(k+1) - f, optimum 0 at
    all-zeros and all-ones."""
    if n < 1 or n & (n - 1) != 0:
        raise ValueError("n must be a power of two")
    k = n.bit_length() - 1

    def value(sol: BitVector) -> int:
        f = 0
        for level in range(k + 1):
            size = 1 << level
            for start in range(0, n, size):
                block = sol.bits[start : start + size]
                if all(b == block[0] for b in block):
                    f += size
        return n * (k + 1) - f

    return ProblemInstance(
        name=f"hiff_{n}",
        representation="bits",
        evaluate=_evaluator("hiff", BitVector, value),
        sample_initial=sample_bits(n),
        metadata={"n": n, "optimum_value": 0.0},
    )


# ---------------------------------------------------------------------------
# Real-vector problems


def sphere(d: int, lo: float, hi: float) -> ProblemInstance:
    if d < 1 or not lo < hi:
        raise ValueError("need d >= 1 and lo < hi")

    def value(sol: RealVector) -> float:
        return sum(c * c for c in sol.coords)

    meta = {"d": d, "bounds": (lo, hi)}
    if lo <= 0.0 <= hi:
        meta["optimum_value"] = 0.0
    return ProblemInstance(
        name=f"sphere_{d}",
        representation="real",
        evaluate=_evaluator("sphere", RealVector, value),
        sample_initial=sample_box(d, lo, hi),
        metadata=meta,
    )


# ---------------------------------------------------------------------------
# MAX-SAT (DIMACS CNF)


def parse_dimacs_cnf(text: str) -> ProblemInstance:
    """Minimization MAX-SAT: objective is the number of unsatisfied clauses."""
    num_vars = num_clauses = None
    clauses = []
    current = []
    header_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise ParseError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(f"malformed header: {line!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(f"malformed header: {line!r}", lineno)
            if num_vars < 1 or num_clauses < 0:
                raise ParseError("header counts must be positive", lineno)
            header_line = lineno
            continue
        if num_vars is None:
            raise ParseError("clause before header", lineno)
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise ParseError(f"bad literal token: {token!r}", lineno)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                if abs(lit) > num_vars:
                    raise ParseError(f"literal {lit} out of range", lineno)
                current.append(lit)
    if num_vars is None:
        raise ParseError("missing 'p cnf' header", 1)
    if current:
        raise ParseError("unterminated clause at end of input", header_line)
    if len(clauses) != num_clauses:
        raise ParseError(
            f"header declares {num_clauses} clauses, found {len(clauses)}",
            header_line,
        )

    def value(sol: BitVector) -> int:
        if len(sol) != num_vars:
            raise ComponentContractError(
                f"maxsat: expected {num_vars} bits, got {len(sol)}"
            )
        unsat = 0
        for clause in clauses:
            for lit in clause:
                bit = sol.bits[abs(lit) - 1]
                if (lit > 0 and bit) or (lit < 0 and not bit):
                    break
            else:
                unsat += 1
        return unsat

    return ProblemInstance(
        name=f"maxsat_{num_vars}v_{num_clauses}c",
        representation="bits",
        evaluate=_evaluator("maxsat", BitVector, value),
        sample_initial=sample_bits(num_vars),
        metadata={"n": num_vars, "clauses": clauses},
    )


# ---------------------------------------------------------------------------
# TSP (TSPLIB EUC_2D subset)


def _nint(x: float) -> int:
    return int(x + 0.5)


def tour_length(order, coords) -> int:
    n = len(order)
    total = 0
    for i in range(n):
        (x1, y1) = coords[order[i]]
        (x2, y2) = coords[order[(i + 1) % n]]
        total += _nint(math.sqrt((x1 - x2) ** 2 + (y1 - y2) ** 2))
    return total


def parse_tsplib(text: str) -> ProblemInstance:
    """EUC_2D TSPLIB instances only; tour length uses nint-rounded edges."""
    dimension = None
    name = "tsp"
    edge_weight_type = None
    coords = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line or line == "EOF":
            continue
        if line.startswith("NODE_COORD_SECTION"):
            if dimension is None:
                raise ParseError("NODE_COORD_SECTION before DIMENSION", i)
            for _ in range(dimension):
                if i >= len(lines):
                    raise ParseError("unexpected end of coordinate section", i)
                parts = lines[i].split()
                i += 1
                if len(parts) != 3:
                    raise ParseError(f"bad coordinate line: {lines[i-1]!r}", i)
                try:
                    idx, x, y = int(parts[0]), float(parts[1]), float(parts[2])
                except ValueError:
                    raise ParseError(f"bad coordinate line: {lines[i-1]!r}", i)
                coords[idx - 1] = (x, y)
            continue
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "NAME":
            name = value
        elif key == "TYPE":
            if value != "TSP":
                raise ParseError(f"unsupported TYPE: {value!r}", i)
        elif key == "DIMENSION":
            try:
                dimension = int(value)
            except ValueError:
                raise ParseError(f"bad DIMENSION: {value!r}", i)
        elif key == "EDGE_WEIGHT_TYPE":
            edge_weight_type = value
            if value != "EUC_2D":
                raise ParseError(f"unsupported EDGE_WEIGHT_TYPE: {value!r}", i)
    if dimension is None:
        raise ParseError("missing DIMENSION", 1)
    if edge_weight_type is None:
        raise ParseError("missing EDGE_WEIGHT_TYPE", 1)
    if len(coords) != dimension or set(coords) != set(range(dimension)):
        raise ParseError(
            f"expected coordinates for cities 1..{dimension}, got {len(coords)}", 1
        )
    city_coords = tuple(coords[c] for c in range(dimension))

    def value(sol: Permutation) -> int:
        if len(sol) != dimension:
            raise ComponentContractError(
                f"tsp: expected permutation of {dimension} cities"
            )
        return tour_length(sol.order, city_coords)

    return ProblemInstance(
        name=name,
        representation="perm",
        evaluate=_evaluator("tsp", Permutation, value),
        sample_initial=sample_permutation(dimension),
        metadata={"n": dimension, "coords": city_coords},
    )


# ---------------------------------------------------------------------------
# Magic square


def magic_square(k: int) -> ProblemInstance:
    """Permutation over 0..k^2-1; cell value is index+1 placed row-major.
    Objective sums |line sum - magic constant| over rows, columns, diagonals."""
    if k < 3:
        raise ValueError("k must be >= 3")
    n = k * k
    magic = k * (n + 1) // 2

    def value(sol: Permutation) -> int:
        if len(sol) != n:
            raise ComponentContractError(f"magic_square: expected {n} cells")
        grid = [[sol.order[r * k + c] + 1 for c in range(k)] for r in range(k)]
        total = 0
        for r in range(k):
            total += abs(sum(grid[r]) - magic)
        for c in range(k):
            total += abs(sum(grid[r][c] for r in range(k)) - magic)
        total += abs(sum(grid[i][i] for i in range(k)) - magic)
        total += abs(sum(grid[i][k - 1 - i] for i in range(k)) - magic)
        return total

    return ProblemInstance(
        name=f"magic_square_{k}",
        representation="perm",
        evaluate=_evaluator("magic_square", Permutation, value),
        sample_initial=sample_permutation(n),
        metadata={"k": k, "n": n, "optimum_value": 0.0},
    )

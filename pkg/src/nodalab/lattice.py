"""Sums of two squares: lattice points on circles and their vanishing subset counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .errors import BudgetExceededError, PreconditionError

NODE_BUDGET = 10_000_000
LENGTH_CAP = 8


def sum_two_squares_sieve(limit: int) -> list[int]:
    """Integers in [0, limit] expressible as a^2 + b^2, ascending, no duplicates."""
    if limit < 0:
        raise PreconditionError("limit must be non-negative")
    hits = bytearray(limit + 1)
    a = 0
    while a * a <= limit:
        aa = a * a
        b = a
        while aa + b * b <= limit:
            hits[aa + b * b] = 1
            b += 1
        a += 1
    return [n for n, h in enumerate(hits) if h]


@dataclass(frozen=True)
class LatticePointSet:
    """Integer points on the circle x^2 + y^2 = energy, lexicographically sorted.

    `representable` is False exactly when the energy is not a sum of two
    squares, in which case `points` is empty.
    """

    energy: int
    points: tuple[tuple[int, int], ...]
    representable: bool

    @property
    def size(self) -> int:
        return len(self.points)


def lattice_points(energy: int) -> LatticePointSet:
    if energy < 0:
        raise PreconditionError("energy must be non-negative")
    pts = []
    r = math.isqrt(energy)
    for x in range(-r, r + 1):
        rem = energy - x * x
        y = math.isqrt(rem)
        if y * y == rem:
            pts.append((x, y))
            if y > 0:
                pts.append((x, -y))
    pts.sort()
    return LatticePointSet(energy, tuple(pts), bool(pts))


def _points_of(energy_or_points) -> LatticePointSet:
    if isinstance(energy_or_points, LatticePointSet):
        return energy_or_points
    return lattice_points(int(energy_or_points))


def _is_minimal(subset) -> bool:
    # A proper sub-sum vanishes iff its complement does, so sizes up to half suffice.
    l = len(subset)
    for size in range(2, l // 2 + 1):
        for combo in combinations(subset, size):
            if sum(p[0] for p in combo) == 0 and sum(p[1] for p in combo) == 0:
                return False
    return True


def minimally_vanishing_count(
    energy,
    length: int,
    *,
    length_cap: int = LENGTH_CAP,
    node_budget: int = NODE_BUDGET,
) -> int:
    """Count `length`-element subsets with zero sum and no vanishing proper sub-sum.

    Exhaustive depth-first enumeration in canonical (lexicographic) order with
    partial-sum pruning; raises BudgetExceededError when either C(N, length) or
    the number of visited search nodes passes `node_budget`.
    """
    if length < 3:
        raise PreconditionError("length must be at least 3")
    if length > length_cap:
        raise PreconditionError(f"length {length} above exhaustive-search cap {length_cap}")
    pset = _points_of(energy)
    pts = pset.points
    n = pset.size
    if length > n:
        return 0
    if math.comb(n, length) > node_budget:
        raise BudgetExceededError(f"search too large: C({n},{length}) exceeds budget {node_budget}")
    e = pset.energy
    index = {p: i for i, p in enumerate(pts)}

    count = 0
    nodes = 0
    chosen: list[tuple[int, int]] = []
    chosen_set: set[tuple[int, int]] = set()

    def rec(start: int, sx: int, sy: int, depth: int):
        nonlocal count, nodes
        rem = length - depth
        if rem == 1:
            nodes += 1
            target = (-sx, -sy)
            i = index.get(target)
            if i is not None and i >= start and _is_minimal(chosen + [target]):
                count += 1
            return
        for i in range(start, n - rem + 1):
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError("search too large: node budget exceeded")
            p = pts[i]
            if (-p[0], -p[1]) in chosen_set:
                continue  # antipodal pair is already a vanishing 2-sum
            tx, ty = sx + p[0], sy + p[1]
            if depth >= 1 and tx == 0 and ty == 0:
                continue  # vanishing proper prefix
            r2 = rem - 1
            if tx * tx + ty * ty > r2 * r2 * e:
                continue  # remaining points cannot cancel this partial sum
            chosen.append(p)
            chosen_set.add(p)
            rec(i + 1, tx, ty, depth + 1)
            chosen.pop()
            chosen_set.remove(p)

    if e == 0:
        return 0
    rec(0, 0, 0, 0)
    return count


@dataclass(frozen=True)
class CorrelationReport:
    """Per-length counts of minimally vanishing subsets against the N^(gamma*l) bound."""

    energy: int
    size: int
    gamma: float
    B: int
    counts: dict[int, int]
    bounds: dict[int, float]
    passes: bool


def condition_I_report(
    energy,
    gamma: float,
    B: int,
    *,
    length_cap: int = LENGTH_CAP,
    node_budget: int = NODE_BUDGET,
) -> CorrelationReport:
    if not 0.0 < gamma < 0.5:
        raise PreconditionError("gamma must lie in (0, 1/2)")
    if B < 3:
        raise PreconditionError("B must be at least 3")
    pset = _points_of(energy)
    counts: dict[int, int] = {}
    bounds: dict[int, float] = {}
    passes = True
    for l in range(3, B + 1):
        c = minimally_vanishing_count(pset, l, length_cap=max(length_cap, B), node_budget=node_budget)
        counts[l] = c
        bounds[l] = float(pset.size) ** (gamma * l)
        passes = passes and c <= bounds[l]
    return CorrelationReport(pset.energy, pset.size, gamma, B, counts, bounds, passes)

"""Joint moments of arc-aggregated coefficients against complex Gaussian references.

Moment tuples draw points from each arc with repetition (they come from expanding
powers); that is deliberately different from the subset counting in `lattice`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.stats import norm as _norm

from .errors import BudgetExceededError, PreconditionError
from .eigenfunctions import CoefficientVector, arc_point_sets
from .lattice import lattice_points
from .measures import ArcBinning

TWO_PI = 2.0 * np.pi
TUPLE_BUDGET = 10_000_000
CUBE_BUDGET = 1_000_000


@dataclass(frozen=True)
class MomentSpec:
    """Exponent pattern: for each positive arc k, powers (r_k, s_k) of b_k and conj(b_k)."""

    arcs: tuple[int, ...]
    powers: tuple[tuple[int, int], ...]

    @staticmethod
    def from_maps(r: dict[int, int], s: dict[int, int]) -> "MomentSpec":
        arcs = tuple(sorted(set(r) | set(s)))
        return MomentSpec(arcs, tuple((int(r.get(k, 0)), int(s.get(k, 0))) for k in arcs))

    @property
    def order(self) -> int:
        return sum(rk + sk for rk, sk in self.powers)

    def conjugate(self) -> "MomentSpec":
        return MomentSpec(self.arcs, tuple((sk, rk) for rk, sk in self.powers))

    def encode(self) -> str:
        return ";".join(f"{k}:{rk}.{sk}" for k, (rk, sk) in zip(self.arcs, self.powers))


def gaussian_joint_moment(spec: MomentSpec) -> float:
    """Product over arcs of delta(r_k, s_k) * r_k! for i.i.d. standard complex Gaussians."""
    out = 1.0
    for rk, sk in spec.powers:
        if rk != sk:
            return 0.0
        out *= math.factorial(rk)
    return out


def enumerate_specs(arcs, max_order: int):
    """All specs over the given arcs with 1 <= total order <= max_order."""
    arcs = tuple(arcs)
    slots = 2 * len(arcs)

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    for total in range(1, max_order + 1):
        for combo in compositions(total, slots):
            powers = tuple((combo[2 * i], combo[2 * i + 1]) for i in range(len(arcs)))
            yield MomentSpec(arcs, powers)


@dataclass(frozen=True)
class MomentValue:
    value: complex
    diagonal: complex
    off_diagonal: complex
    vanishing_tuples: int
    off_diagonal_tuples: int


def _arc_members(coeffs: CoefficientVector, binning: ArcBinning, k: int):
    groups = arc_point_sets(lattice_points(coeffs.energy), binning.K)
    return groups.get(k, [])


def arc_moment_exact(
    coeffs: CoefficientVector,
    binning: ArcBinning,
    spec: MomentSpec,
    *,
    tuple_budget: int = TUPLE_BUDGET,
) -> MomentValue:
    """Exact joint moment by enumerating the vanishing frequency tuples.

    For each arc the (r_k + s_k)-tuples over its points are aggregated by their
    signed frequency sum; arcs are then combined by convolution and the zero-sum
    cell is read off. The diagonal part keeps only tuples whose conjugated block
    is a reordering of the plain block, separately for every arc.
    """
    groups = arc_point_sets(lattice_points(coeffs.energy), binning.K)
    work = 1
    for k, (rk, sk) in zip(spec.arcs, spec.powers):
        if k not in binning.kset:
            raise PreconditionError(f"arc {k} is not in the kept set")
        m = len(groups.get(k, []))
        if rk + sk and m == 0:
            return MomentValue(0.0, 0.0, 0.0, 0, 0)
        work *= max(1, m ** (rk + sk))
    if work > tuple_budget:
        raise BudgetExceededError(f"{work} tuples exceed budget {tuple_budget}")

    # total[(vx, vy)] = sum of coefficient products; counts[(vx, vy)] = #tuples
    total: dict[tuple[int, int], complex] = {(0, 0): 1.0}
    counts: dict[tuple[int, int], int] = {(0, 0): 1}
    diagonal = 1.0 + 0.0j
    scale = 1.0
    for k, (rk, sk) in zip(spec.arcs, spec.powers):
        if rk == sk == 0:
            continue
        members = groups[k]
        mass = binning.arc_masses[k]
        scale *= mass ** (-(rk + sk) / 2.0)
        arc_acc: dict[tuple[int, int], complex] = {}
        arc_cnt: dict[tuple[int, int], int] = {}
        for plain in product(members, repeat=rk):
            a_plain = 1.0 + 0.0j
            sx = sy = 0
            for p in plain:
                a_plain *= coeffs.entries[p]
                sx += p[0]
                sy += p[1]
            for conj in product(members, repeat=sk):
                a = a_plain
                tx, ty = sx, sy
                for q in conj:
                    a *= coeffs.entries[q].conjugate()
                    tx -= q[0]
                    ty -= q[1]
                key = (tx, ty)
                arc_acc[key] = arc_acc.get(key, 0.0) + a
                arc_cnt[key] = arc_cnt.get(key, 0) + 1
        new_total: dict[tuple[int, int], complex] = {}
        new_counts: dict[tuple[int, int], int] = {}
        for (vx, vy), val in total.items():
            for (wx, wy), aval in arc_acc.items():
                key = (vx + wx, vy + wy)
                new_total[key] = new_total.get(key, 0.0) + val * aval
                new_counts[key] = new_counts.get(key, 0) + counts[(vx, vy)] * arc_cnt[(wx, wy)]
        total, counts = new_total, new_counts

        # diagonal factor for this arc: conjugated tuple is a reordering
        if rk != sk:
            diagonal = 0.0
        elif diagonal != 0.0:
            dk = 0.0
            for plain in product(members, repeat=rk):
                mult: dict[tuple[int, int], int] = {}
                w = 1.0
                for p in plain:
                    mult[p] = mult.get(p, 0) + 1
                    w *= abs(coeffs.entries[p]) ** 2
                reorders = math.factorial(rk)
                for c in mult.values():
                    reorders //= math.factorial(c)
                dk += w * reorders
            diagonal *= dk / mass**rk

    value = complex(total.get((0, 0), 0.0)) * scale
    vanishing = counts.get((0, 0), 0)
    diag = complex(diagonal)
    # off-diagonal tuple count: vanishing tuples minus the per-arc reordering ones
    diag_tuples = 1
    for k, (rk, sk) in zip(spec.arcs, spec.powers):
        if rk == sk == 0:
            continue
        if rk != sk:
            diag_tuples = 0
            break
        members = groups[k]
        cnt = 0
        for plain in product(members, repeat=rk):
            mult: dict[tuple[int, int], int] = {}
            for p in plain:
                mult[p] = mult.get(p, 0) + 1
            reorders = math.factorial(rk)
            for c in mult.values():
                reorders //= math.factorial(c)
            cnt += reorders
        diag_tuples *= cnt
    return MomentValue(value, diag, value - diag, vanishing, vanishing - diag_tuples)


def quadrature_grid_size(coeffs: CoefficientVector, spec: MomentSpec) -> int:
    """Smallest grid making the rectangle rule exact for the moment integrand."""
    max_abs = max(max(abs(p[0]), abs(p[1])) for p in coeffs.points)
    return 2 * spec.order * max_abs + 1


def arc_coefficient_grids(coeffs: CoefficientVector, binning: ArcBinning, arcs, grid: int):
    """Arc coefficient values on the uniform grid, one (grid, grid) array per arc."""
    groups = arc_point_sets(lattice_points(coeffs.energy), binning.K)
    xs = np.arange(grid) / grid
    out = {}
    for k in arcs:
        members = groups.get(k, [])
        mass = binning.arc_masses[k]
        acc = np.zeros((grid, grid), dtype=complex)
        for p in members:
            ex = np.exp(1j * TWO_PI * p[0] * xs)
            ey = np.exp(1j * TWO_PI * p[1] * xs)
            acc += coeffs.entries[p] * np.outer(ex, ey)
        out[k] = acc / math.sqrt(mass)
    return out


def arc_moment_quadrature(
    coeffs: CoefficientVector,
    binning: ArcBinning,
    spec: MomentSpec,
    grid: int | None = None,
    *,
    _grids=None,
) -> complex:
    """Torus average of the moment integrand on a uniform grid.

    The integrand is a trigonometric polynomial, so any grid at least
    `quadrature_grid_size` per axis integrates it exactly; smaller grids warn.
    """
    need = quadrature_grid_size(coeffs, spec)
    if grid is None:
        grid = need
    elif grid < need:
        warnings.warn(f"grid {grid} below exactness threshold {need}", stacklevel=2)
    bk = _grids if _grids is not None else arc_coefficient_grids(coeffs, binning, spec.arcs, grid)
    prod_grid = np.ones((grid, grid), dtype=complex)
    for k, (rk, sk) in zip(spec.arcs, spec.powers):
        if rk:
            prod_grid *= bk[k] ** rk
        if sk:
            prod_grid *= np.conj(bk[k]) ** sk
    return complex(prod_grid.mean())


@dataclass(frozen=True)
class MomentComparison:
    spec: MomentSpec
    gaussian_value: float
    exact_value: complex
    quadrature_value: complex | None
    off_diagonal: complex
    off_diagonal_tuples: int

    @property
    def gap(self) -> float:
        return abs(self.gaussian_value - self.exact_value)


@dataclass(frozen=True)
class MomentSweep:
    rows: tuple[MomentComparison, ...]
    max_gap: float
    argmax: MomentSpec
    max_mass: float

    def off_diagonal_bound_shape(self, row: MomentComparison) -> float:
        """Reference shape J * M^(order/2) for the off-diagonal magnitude."""
        return row.off_diagonal_tuples * self.max_mass ** (row.spec.order / 2.0)


def moment_gap_sweep(
    coeffs: CoefficientVector,
    binning: ArcBinning,
    B: int,
    *,
    with_quadrature: bool = False,
    tuple_budget: int = TUPLE_BUDGET,
) -> MomentSweep:
    """Max |gaussian - exact| over all specs of total order below B on positive arcs."""
    if B > 6 + 1:
        # order < B, so B=7 already means order-6 enumerations
        raise PreconditionError("B above the default exhaustive budget (6)")
    pos = [k for k in binning.kset if k >= 1]
    rows = []
    best = None
    for spec in enumerate_specs(pos, B - 1):
        mv = arc_moment_exact(coeffs, binning, spec, tuple_budget=tuple_budget)
        quad = arc_moment_quadrature(coeffs, binning, spec) if with_quadrature else None
        row = MomentComparison(
            spec, gaussian_joint_moment(spec), mv.value, quad, mv.off_diagonal, mv.off_diagonal_tuples
        )
        rows.append(row)
        if best is None or row.gap > best.gap:
            best = row
    if best is None:
        raise PreconditionError("no specs to sweep; is the kept arc set empty?")
    return MomentSweep(tuple(rows), best.gap, best.spec, coeffs.max_mass)


# ---------------------------------------------------------------------------
# Cube probabilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubeGapReport:
    kappa: int
    L: float
    eta: float
    cells_per_axis: int
    max_gap: float
    argmax_cell: tuple[int, ...]
    big_cube_gap: float
    boundary_band_fraction: float
    x_samples: int
    stderr_ceiling: float


def cube_probability_gap(
    coeffs: CoefficientVector,
    binning: ArcBinning,
    L: float,
    eta: float,
    x_samples: int,
    seed: int,
    *,
    gaussian_trials: int = 0,
    band_width: float | None = None,
    cube_budget: int = CUBE_BUDGET,
) -> CubeGapReport:
    """Sup over sub-cubes of |quasi-probability - Gaussian probability|.

    The cube lattice is centred at the origin. Gaussian cell probabilities come
    from the closed-form product of normal interval masses unless
    `gaussian_trials` asks for a Monte Carlo reference instead.
    """
    pos = [k for k in binning.kset if k >= 1]
    kappa = len(pos)
    cells = math.ceil(L / eta)
    if cells ** (2 * kappa) > cube_budget:
        raise BudgetExceededError(f"{cells ** (2 * kappa)} sub-cubes exceed budget {cube_budget}")

    groups = arc_point_sets(lattice_points(coeffs.energy), binning.K)
    rng = np.random.default_rng(seed)
    xs = rng.random((x_samples, 2))
    coords = np.empty((x_samples, 2 * kappa))
    for i, k in enumerate(pos):
        members = groups[k]
        mass = binning.arc_masses[k]
        acc = np.zeros(x_samples, dtype=complex)
        for p in members:
            acc += coeffs.entries[p] * np.exp(1j * TWO_PI * (xs @ np.array(p, dtype=float)))
        acc /= math.sqrt(mass)
        coords[:, 2 * i] = acc.real
        coords[:, 2 * i + 1] = acc.imag

    edges = np.linspace(-L / 2.0, L / 2.0, cells + 1)
    inside = np.all((coords > -L / 2.0) & (coords <= L / 2.0), axis=1)
    idx = np.clip(np.searchsorted(edges, coords, side="left") - 1, 0, cells - 1)
    flat = np.zeros(cells ** (2 * kappa))
    if inside.any():
        lin = np.ravel_multi_index(tuple(idx[inside].T), (cells,) * (2 * kappa))
        np.add.at(flat, lin, 1.0)
    emp = flat / x_samples

    if gaussian_trials > 0:
        grng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(10**6,)))
        g = grng.standard_normal((gaussian_trials, 2 * kappa)) * math.sqrt(0.5)
        ginside = np.all((g > -L / 2.0) & (g <= L / 2.0), axis=1)
        gidx = np.clip(np.searchsorted(edges, g, side="left") - 1, 0, cells - 1)
        gflat = np.zeros_like(flat)
        if ginside.any():
            lin = np.ravel_multi_index(tuple(gidx[ginside].T), (cells,) * (2 * kappa))
            np.add.at(gflat, lin, 1.0)
        gauss = gflat / gaussian_trials
        big_gauss = float(ginside.mean())
    else:
        one_dim = np.diff(_norm.cdf(edges * math.sqrt(2.0)))  # coord std = 1/sqrt(2)
        gauss = one_dim
        for _ in range(2 * kappa - 1):
            gauss = np.multiply.outer(gauss, one_dim)
        gauss = gauss.ravel()
        big_gauss = float(one_dim.sum() ** (2 * kappa))

    diff = np.abs(emp - gauss)
    arg = int(np.argmax(diff))
    big_emp = float(inside.mean())
    if band_width is None:
        band_width = eta / 20.0
    frac_to_edge = np.minimum((coords - (-L / 2.0)) % eta, (-(coords - (-L / 2.0))) % eta)
    band_frac = float(np.mean(np.any(frac_to_edge < band_width, axis=1)))
    return CubeGapReport(
        kappa=kappa,
        L=L,
        eta=eta,
        cells_per_axis=cells,
        max_gap=float(diff[arg]),
        argmax_cell=tuple(int(v) for v in np.unravel_index(arg, (cells,) * (2 * kappa))),
        big_cube_gap=abs(big_emp - big_gauss),
        boundary_band_fraction=band_frac,
        x_samples=x_samples,
        stderr_ceiling=0.5 / math.sqrt(x_samples),
    )


# ---------------------------------------------------------------------------
# Jacobian of x -> (Re b_k, Im b_k)
# ---------------------------------------------------------------------------


def arc_jacobian_det(coeffs: CoefficientVector, binning: ArcBinning, k: int, x) -> float:
    """Jacobian determinant of x -> (Re b_k, Im b_k).

    Equals (4 pi^2 / m_k) Im sum_{p,q} p1 q2 conj(a_p) a_q e(<q - p, x>); only
    the antisymmetric part of the kernel survives the imaginary part, so the
    determinant vanishes identically when the arc holds a single frequency.
    """
    if k not in binning.kset:
        raise PreconditionError(f"arc {k} is not in the kept set")
    members = _arc_members(coeffs, binning, k)
    mass = binning.arc_masses[k]
    x = np.asarray(x, dtype=float)
    acc = 0.0 + 0.0j
    for p in members:
        for q in members:
            phase = np.exp(1j * TWO_PI * ((q[0] - p[0]) * x[0] + (q[1] - p[1]) * x[1]))
            acc += p[0] * q[1] * coeffs.entries[p].conjugate() * coeffs.entries[q] * phase
    return float((4.0 * math.pi**2 / mass) * acc.imag)


def arc_jacobian_det_fd(
    coeffs: CoefficientVector, binning: ArcBinning, k: int, x, h: float = 1e-6
) -> float:
    """Central finite-difference determinant of the same map, for cross-checking."""
    from .eigenfunctions import arc_coefficients

    def bk(pt):
        return arc_coefficients(coeffs, binning, pt)[k]

    x = np.asarray(x, dtype=float)
    dx = (bk(x + [h, 0.0]) - bk(x - [h, 0.0])) / (2.0 * h)
    dy = (bk(x + [0.0, h]) - bk(x - [0.0, h])) / (2.0 * h)
    return dx.real * dy.imag - dy.real * dx.imag

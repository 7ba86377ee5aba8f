"""Grid-based nodal domain counting: censuses, localized box counts, contour length.

Components are 4-connected sets of same-sign cells; cells where the sampled
value is numerically zero belong to no component and act as separators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateSamplingError,
    PreconditionError,
    UnresolvedCensusError,
)
from .eigenfunctions import CoefficientVector, toral_field
from .fields import TORUS, Domain, GRID_OFFSET, PlanarField, grid_axes

ZERO_TOL_REL = 1e-11
MAX_RESOLUTION = 4096
FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass(frozen=True)
class Component:
    """One nodal domain as seen by the grid."""

    label: int
    sign: int
    cells: int
    area: float
    # Covering interval per axis in physical units; on the torus this is the
    # minimal covering arc (start, width) with start in [0, 1).
    span_x: tuple[float, float]
    span_y: tuple[float, float]
    touches_boundary: bool

    @property
    def diameter(self) -> float:
        return math.hypot(self.span_x[1], self.span_y[1])


@dataclass(frozen=True)
class NodalCensus:
    domain: Domain
    resolution: int
    count_total: int
    count_interior: int
    components: tuple[Component, ...]
    zero_cell_fraction: float
    status: str = "single"
    counts_checked: tuple[int, ...] = field(default_factory=tuple)

    @property
    def count(self) -> int:
        """The count the stability protocol compares: interior-only on squares."""
        return self.count_interior if self.domain.kind == "square" else self.count_total


def _minimal_cover(indices: np.ndarray, n: int, periodic: bool) -> tuple[int, int]:
    """(start, span) of the smallest cell interval (arc if periodic) covering `indices`."""
    u = np.unique(indices)
    if not periodic or len(u) == 1:
        return int(u[0]), int(u[-1] - u[0] + 1)
    gaps = np.diff(u)
    wrap_gap = u[0] + n - u[-1]
    i = int(np.argmax(gaps)) if gaps.size else -1
    biggest = gaps[i] if gaps.size else 0
    if wrap_gap >= biggest:
        return int(u[0]), int(u[-1] - u[0] + 1)
    return int(u[i + 1]), int(n - gaps[i] + 1)


def _label_components(values: np.ndarray, periodic: bool):
    """Label 4-connected same-sign cells; returns (labels, nlab, sign_of_label)."""
    n0, n1 = values.shape
    scale = float(np.abs(values).max())
    if scale == 0.0:
        raise DegenerateSamplingError("field vanishes identically on the grid")
    tol = ZERO_TOL_REL * scale
    sign = np.zeros(values.shape, dtype=np.int8)
    sign[values > tol] = 1
    sign[values < -tol] = -1
    zero_frac = float(np.mean(sign == 0))
    if zero_frac > 0.01:
        raise DegenerateSamplingError(f"{zero_frac:.1%} of cells sampled as exact zeros")

    pos, npos = ndimage.label(sign == 1, structure=FOUR_CONN)
    neg, nneg = ndimage.label(sign == -1, structure=FOUR_CONN)
    labels = pos.astype(np.int64)
    labels[sign == -1] = neg[sign == -1] + npos
    nlab = npos + nneg

    if periodic and nlab:
        parent = np.arange(nlab + 1)

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        for a, b, sa, sb in (
            (labels[0, :], labels[-1, :], sign[0, :], sign[-1, :]),
            (labels[:, 0], labels[:, -1], sign[:, 0], sign[:, -1]),
        ):
            same = (sa == sb) & (sa != 0)
            for la, lb in zip(a[same], b[same]):
                union(int(la), int(lb))
        roots = np.array([find(i) for i in range(nlab + 1)])
        # compact relabel
        uniq = np.unique(roots[1:]) if nlab else np.array([], dtype=int)
        remap = np.zeros(nlab + 1, dtype=np.int64)
        remap[uniq] = np.arange(1, len(uniq) + 1)
        labels = remap[roots[labels]]
        nlab = len(uniq)
    return labels, nlab, sign, zero_frac


def census(field_: PlanarField, domain: Domain | None, resolution: int) -> NodalCensus:
    """Single-resolution census: label cells, measure components, no stability check."""
    domain = domain or field_.domain
    if resolution < 64:
        raise PreconditionError("resolution must be at least 64")
    periodic = domain.kind == "torus"
    xs, ys = grid_axes(domain, resolution)
    values = field_.grid(xs, ys)
    labels, nlab, sign, zero_frac = _label_components(values, periodic)
    n = resolution
    h = (1.0 if periodic else domain.side) / n

    comps: list[Component] = []
    interior = 0
    if nlab:
        flat = labels.ravel()
        order = np.argsort(flat, kind="stable")
        sorted_labels = flat[order]
        starts = np.searchsorted(sorted_labels, np.arange(1, nlab + 1))
        ends = np.searchsorted(sorted_labels, np.arange(1, nlab + 1), side="right")
        rows = order // n
        cols = order % n
        x0 = 0.0 if periodic else domain.center[0] - domain.side / 2.0
        y0 = 0.0 if periodic else domain.center[1] - domain.side / 2.0
        for lab in range(1, nlab + 1):
            sel = slice(starts[lab - 1], ends[lab - 1])
            r = rows[sel]
            c = cols[sel]
            cells = int(ends[lab - 1] - starts[lab - 1])
            sx0, sxn = _minimal_cover(r, n, periodic)
            sy0, syn = _minimal_cover(c, n, periodic)
            touches = False
            if not periodic:
                touches = bool(
                    r.min() == 0 or r.max() == n - 1 or c.min() == 0 or c.max() == n - 1
                )
            comp = Component(
                label=lab,
                sign=int(sign[r[0], c[0]]),
                cells=cells,
                area=cells * h * h,
                span_x=(x0 + sx0 * h, sxn * h),
                span_y=(y0 + sy0 * h, syn * h),
                touches_boundary=touches,
            )
            comps.append(comp)
            if not touches:
                interior += 1
    return NodalCensus(
        domain=domain,
        resolution=resolution,
        count_total=nlab,
        count_interior=interior,
        components=tuple(comps),
        zero_cell_fraction=zero_frac,
    )


def count_nodal_domains(
    field_: PlanarField,
    domain: Domain | None = None,
    resolution: int | None = None,
    *,
    max_resolution: int = MAX_RESOLUTION,
    stability: str = "equal",
) -> NodalCensus:
    """Census whose count is reproduced at doubled resolution.

    stability = "equal":    counts must match exactly (refining until they do);
                "tolerant": counts may differ by max(2, 0.5%), for Monte Carlo use;
                "off":      single resolution, no check.
    Raises UnresolvedCensusError when the protocol fails at max_resolution.
    """
    domain = domain or field_.domain
    if resolution is None:
        # Floor of 128: eigenfunctions can vanish on full grid diagonals, and the
        # zero-cell fraction of one such line is 1/n, which must stay below 1%.
        side = 1.0 if domain.kind == "torus" else domain.side
        resolution = max(128, int(math.ceil(16.0 * field_.wavenumber * side)))
    if resolution < 64:
        raise PreconditionError("resolution must be at least 64")
    if stability == "off":
        return census(field_, domain, resolution)
    n = resolution
    coarse = census(field_, domain, n)
    while True:
        if 2 * n > max_resolution:
            raise UnresolvedCensusError(coarse.count, None, n)
        fine = census(field_, domain, 2 * n)
        if stability == "tolerant":
            # Random waves shed ~1-3% spurious splits per doubling; the band
            # accepts that drift so Monte Carlo trials are not discarded for it.
            tol = max(3, int(0.03 * max(coarse.count, fine.count)))
            ok = abs(fine.count - coarse.count) <= tol
        else:
            ok = fine.count == coarse.count
        if ok:
            return NodalCensus(
                domain=fine.domain,
                resolution=fine.resolution,
                count_total=fine.count_total,
                count_interior=fine.count_interior,
                components=fine.components,
                zero_cell_fraction=fine.zero_cell_fraction,
                status="stable",
                counts_checked=(coarse.count, fine.count),
            )
        if 2 * n >= max_resolution:
            raise UnresolvedCensusError(coarse.count, fine.count, 2 * n)
        n *= 2
        coarse = fine


# ---------------------------------------------------------------------------
# Localized box counts
# ---------------------------------------------------------------------------


def _contained_in_box(comp: Component, cx: float, cy: float, side: float) -> bool:
    """Strict containment of the component's covering box in the open box at (cx, cy)."""
    for (start, width), c in ((comp.span_x, cx), (comp.span_y, cy)):
        if width >= side:
            return False
        centre = (start + width / 2.0) % 1.0
        d = abs(centre - c) % 1.0
        d = min(d, 1.0 - d)
        if d >= (side - width) / 2.0:
            return False
    return True


def box_count_mean_grid(census_: NodalCensus, side: float, x_grid: int) -> float:
    """Mean over an x_grid^2 lattice of centres of the strictly-contained count."""
    total = 0
    for i in range(x_grid):
        for j in range(x_grid):
            cx, cy = i / x_grid, j / x_grid
            total += sum(_contained_in_box(c, cx, cy, side) for c in census_.components)
    return total / (x_grid * x_grid)


def box_count_integral(census_: NodalCensus, side: float) -> float:
    """Exact integral over centres of the contained-count indicator sum."""
    acc = 0.0
    for c in census_.components:
        wx, wy = c.span_x[1], c.span_y[1]
        if wx < side and wy < side:
            acc += (side - wx) * (side - wy)
    return acc


@dataclass(frozen=True)
class LocalizedCountReport:
    energy: int
    R: float
    lhs: int
    rhs: float
    rhs_exact: float
    error_scale: float

    @property
    def difference(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def ratio(self) -> float:
        return self.difference / self.error_scale


def localized_count_integral(
    coeffs: CoefficientVector,
    R: float,
    x_grid: int,
    *,
    census_: NodalCensus | None = None,
    resolution: int | None = None,
    max_resolution: int = MAX_RESOLUTION,
) -> LocalizedCountReport:
    """Compare the global count with the rescaled mean of localized box counts."""
    e = coeffs.energy
    if not 1.0 < R < math.sqrt(e):
        raise PreconditionError(f"R={R} outside (1, sqrt({e}))")
    if census_ is None:
        census_ = count_nodal_domains(
            toral_field(coeffs), TORUS, resolution, max_resolution=max_resolution
        )
    side = R / math.sqrt(e)
    mean_grid = box_count_mean_grid(census_, side, x_grid)
    scale = e / (R * R)
    return LocalizedCountReport(
        energy=e,
        R=R,
        lhs=census_.count_total,
        rhs=scale * mean_grid,
        rhs_exact=scale * box_count_integral(census_, side),
        error_scale=e / R,
    )


# ---------------------------------------------------------------------------
# Zero-contour length by marching squares
# ---------------------------------------------------------------------------

_SEG_TABLE: dict[int, list[tuple[str, str]]] = {
    1: [("L", "B")],
    2: [("B", "R")],
    3: [("L", "R")],
    4: [("R", "T")],
    6: [("B", "T")],
    7: [("L", "T")],
    8: [("T", "L")],
    9: [("T", "B")],
    11: [("T", "R")],
    12: [("R", "L")],
    13: [("R", "B")],
    14: [("B", "L")],
}


def nodal_set_length(
    field_: PlanarField, domain: Domain | None = None, resolution: int = 256
) -> float:
    """Total zero-contour length by linear interpolation on grid edges."""
    domain = domain or field_.domain
    if resolution < 64:
        raise PreconditionError("resolution must be at least 64")
    periodic = domain.kind == "torus"
    n = resolution
    if periodic:
        xs = (np.arange(n + 1) + GRID_OFFSET) / n
        ys = xs
        h = 1.0 / n
    else:
        half = domain.side / 2.0
        xs = np.linspace(domain.center[0] - half, domain.center[0] + half, n + 1)
        ys = np.linspace(domain.center[1] - half, domain.center[1] + half, n + 1)
        h = domain.side / n
    v = field_.grid(xs, ys)
    scale = float(np.abs(v).max())
    if scale == 0.0:
        raise DegenerateSamplingError("field vanishes identically on the grid")
    v = np.where(np.abs(v) <= ZERO_TOL_REL * scale, 0.0, v)

    b = (v > 0).astype(np.int8)
    idx = b[:-1, :-1] + 2 * b[1:, :-1] + 4 * b[1:, 1:] + 8 * b[:-1, 1:]

    with np.errstate(divide="ignore", invalid="ignore"):
        tx = v[:-1, :] / (v[:-1, :] - v[1:, :])  # crossing along +x edges
        ty = v[:, :-1] / (v[:, :-1] - v[:, 1:])  # crossing along +y edges

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")

    def endpoint(edge, i, j):
        if edge == "B":  # y = j edge, between (i, j) and (i+1, j)
            return np.stack([i + tx[i, j], j.astype(float)], axis=-1)
        if edge == "T":
            return np.stack([i + tx[i, j + 1], (j + 1).astype(float)], axis=-1)
        if edge == "L":  # x = i edge, between (i, j) and (i, j+1)
            return np.stack([i.astype(float), j + ty[i, j]], axis=-1)
        return np.stack([(i + 1).astype(float), j + ty[i + 1, j]], axis=-1)

    total = 0.0
    for code, segs in _SEG_TABLE.items():
        mask = idx == code
        if not mask.any():
            continue
        i, j = ii[mask], jj[mask]
        for e1, e2 in segs:
            p = endpoint(e1, i, j)
            q = endpoint(e2, i, j)
            total += float(np.hypot(*(q - p).T).sum())

    # Saddle cells: centre average picks the diagonal pairing.
    for code in (5, 10):
        mask = idx == code
        if not mask.any():
            continue
        i, j = ii[mask], jj[mask]
        centre = (v[i, j] + v[i + 1, j] + v[i, j + 1] + v[i + 1, j + 1]) / 4.0
        pb, pt = endpoint("B", i, j), endpoint("T", i, j)
        pl, pr = endpoint("L", i, j), endpoint("R", i, j)
        join_bl = (centre > 0) == (code == 10)
        for sel, (a1, a2), (b1, b2) in (
            (join_bl, (pb, pl), (pt, pr)),
            (~join_bl, (pb, pr), (pt, pl)),
        ):
            if sel.any():
                total += float(np.hypot(*(a2[sel] - a1[sel]).T).sum())
                total += float(np.hypot(*(b2[sel] - b1[sel]).T).sum())
    return total * h

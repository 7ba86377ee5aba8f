"""Symmetric probability measures on the unit circle.

Angles live in (-1/2, 1/2] with unit circumference, so the antipodal map is
t -> t + 1/2 (mod 1) and arcs of index k are ((k-1)/2K, k/2K].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataError, PreconditionError

MASS_TOL = 1e-12
ANGLE_MERGE_TOL = 1e-12
DEFAULT_ATOMIZATION = 4096


def wrap_angle(t: float) -> float:
    """Map a circle coordinate into (-1/2, 1/2]."""
    u = t - math.floor(t)  # [0, 1)
    if u > 0.5:
        u -= 1.0
    return u


def antipode(t: float) -> float:
    return wrap_angle(t + 0.5)


def circle_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def unit_vector(angle: float) -> tuple[float, float]:
    return (math.cos(2.0 * math.pi * angle), math.sin(2.0 * math.pi * angle))


@dataclass(frozen=True)
class SpectralMeasure:
    """Atoms (angle, mass) plus an optional uniform component, total mass one."""

    atoms: tuple[tuple[float, float], ...]
    uniform_mass: float = 0.0

    @staticmethod
    def from_atoms(pairs, uniform_mass: float = 0.0, *, validate: bool = True) -> "SpectralMeasure":
        items = sorted((wrap_angle(float(a)), float(m)) for a, m in pairs if m != 0.0)
        if any(m < 0 for _, m in items):
            raise PreconditionError("atom masses must be non-negative")
        merged: list[list[float]] = []
        for a, m in items:
            if merged and a - merged[-1][0] <= ANGLE_MERGE_TOL:
                merged[-1][1] += m
            else:
                merged.append([a, m])
        if len(merged) > 1 and circle_distance(merged[0][0], merged[-1][0]) <= ANGLE_MERGE_TOL:
            merged[0][1] += merged.pop()[1]
        atoms = tuple((a, m) for a, m in merged if m > 0.0)
        mu = SpectralMeasure(atoms, float(uniform_mass))
        if validate:
            mu.validate()
        return mu

    def validate(self):
        if self.uniform_mass < 0:
            raise PreconditionError("uniform mass must be non-negative")
        total = self.total_mass
        if abs(total - 1.0) > 1e-9:
            raise PreconditionError(f"total mass {total} is not 1")
        if not self.atoms:
            return
        angles = self.angles()
        masses = self.masses()
        partners = np.array([antipode(a) for a in angles])
        idx = np.searchsorted(angles, partners)
        for a, m, p, i in zip(angles, masses, partners, idx):
            ok = False
            for j in (i - 1, i, i % len(angles)):
                j = j % len(angles)
                if circle_distance(angles[j], p) <= 1e-9 and abs(masses[j] - m) <= 1e-9:
                    ok = True
                    break
            if not ok:
                raise PreconditionError(f"atom at {a} lacks an equal antipodal partner")

    @property
    def total_mass(self) -> float:
        return sum(m for _, m in self.atoms) + self.uniform_mass

    @property
    def is_atomic(self) -> bool:
        return self.uniform_mass == 0.0

    def angles(self) -> np.ndarray:
        return np.array([a for a, _ in self.atoms])

    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms])


def cilleruelo() -> SpectralMeasure:
    return SpectralMeasure.from_atoms([(-0.25, 0.25), (0.0, 0.25), (0.25, 0.25), (0.5, 0.25)])


def tilted_cilleruelo() -> SpectralMeasure:
    return SpectralMeasure.from_atoms([(-0.375, 0.25), (-0.125, 0.25), (0.125, 0.25), (0.375, 0.25)])


def uniform_measure() -> SpectralMeasure:
    return SpectralMeasure((), 1.0)


def antipodal_pair(angle: float = 0.0) -> SpectralMeasure:
    return SpectralMeasure.from_atoms([(angle, 0.5), (antipode(angle), 0.5)])


NAMED_MEASURES = {
    "cilleruelo": cilleruelo,
    "tilted": tilted_cilleruelo,
    "uniform": uniform_measure,
    "pair": antipodal_pair,
}


def atomize(mu: SpectralMeasure, n_atoms: int = DEFAULT_ATOMIZATION) -> SpectralMeasure:
    """Replace the uniform component by n equally spaced equal atoms (n even)."""
    if mu.is_atomic:
        return mu
    if n_atoms < 2 or n_atoms % 2:
        raise PreconditionError("atomization count must be even and at least 2")
    share = mu.uniform_mass / n_atoms
    pairs = list(mu.atoms) + [((j + 0.5) / n_atoms - 0.5, share) for j in range(n_atoms)]
    return SpectralMeasure.from_atoms(pairs)


def measure_from_coefficients(points, coeffs) -> SpectralMeasure:
    """Spectral measure of a coefficient vector: mass |a|^2 at each point's direction."""
    if set(coeffs.entries) != set(points.points):
        raise PreconditionError("coefficient index set does not match the lattice point set")
    if points.energy <= 0:
        raise PreconditionError("energy must be positive to define directions")
    pairs = []
    for (x, y), a in coeffs.entries.items():
        angle = math.atan2(y, x) / (2.0 * math.pi)
        pairs.append((angle, abs(a) ** 2))
    return SpectralMeasure.from_atoms(pairs)


def fourier_coefficient(mu: SpectralMeasure, n: int) -> complex:
    """n-th Fourier coefficient; the uniform part contributes only at n = 0."""
    out = complex(sum(m * np.exp(-2j * np.pi * n * a) for a, m in mu.atoms))
    if n == 0:
        out += mu.uniform_mass
    return out


# ---------------------------------------------------------------------------
# Arc binning
# ---------------------------------------------------------------------------


def arc_index(angle: float, K: int) -> int:
    """Index k with angle in ((k-1)/2K, k/2K]; boundary hits go to the closed end."""
    t = 2.0 * K * wrap_angle(angle)
    r = round(t)
    k = r if abs(t - r) < 1e-9 else math.ceil(t)
    if k < -K + 1:
        k += 2 * K
    if k > K:
        k -= 2 * K
    return int(k)


def arc_midpoint_angle(k: int, K: int) -> float:
    return wrap_angle((k - 0.5) / (2.0 * K))


@dataclass(frozen=True)
class ArcBinning:
    """Kept arcs of mass >= delta, their masses, midpoints and renormalised measure."""

    K: int
    delta: float
    kset: tuple[int, ...]
    arc_masses: dict[int, float]
    midpoints: dict[int, tuple[float, float]]
    binned: SpectralMeasure | None
    kept_mass: float
    degenerate: bool

    @property
    def kset_pos(self) -> tuple[int, ...]:
        return tuple(k for k in self.kset if k >= 1)

    def normalised_mass(self, k: int) -> float:
        return self.arc_masses[k] / self.kept_mass


def bin_measure(mu: SpectralMeasure, K: int, delta: float) -> ArcBinning:
    if K < 1:
        raise PreconditionError("K must be at least 1")
    if not 0.0 < delta < 1.0:
        raise PreconditionError("delta must lie in (0, 1)")
    masses: dict[int, float] = {}
    for angle, mass in mu.atoms:
        k = arc_index(angle, K)
        masses[k] = masses.get(k, 0.0) + mass
    if mu.uniform_mass > 0.0:
        share = mu.uniform_mass / (2 * K)
        for k in range(-K + 1, K + 1):
            masses[k] = masses.get(k, 0.0) + share
    kset = tuple(sorted(k for k, m in masses.items() if m >= delta))
    kept = sum(masses[k] for k in kset)
    midpoints = {k: unit_vector(arc_midpoint_angle(k, K)) for k in kset}
    if kept <= 0.0:
        return ArcBinning(K, delta, kset, masses, midpoints, None, 0.0, True)
    binned = SpectralMeasure.from_atoms(
        [(arc_midpoint_angle(k, K), masses[k] / kept) for k in kset]
    )
    return ArcBinning(K, delta, kset, masses, midpoints, binned, kept, False)


# ---------------------------------------------------------------------------
# Prokhorov metric on atomic measures
# ---------------------------------------------------------------------------


class _Dinic:
    """Max flow with float capacities; phase count is bounded by the node count."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, c: float):
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def max_flow(self, s: int, t: int, limit: float = float("inf")) -> float:
        eps = 1e-15
        flow = 0.0
        while flow < limit - eps:
            level = [-1] * self.n
            level[s] = 0
            queue = [s]
            for u in queue:
                for eid in self.adj[u]:
                    v = self.to[eid]
                    if self.cap[eid] > eps and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                break
            it = [0] * self.n
            path: list[int] = []
            u = s
            while True:
                if u == t:
                    pushed = min(limit - flow, min(self.cap[eid] for eid in path))
                    for eid in path:
                        self.cap[eid] -= pushed
                        self.cap[eid ^ 1] += pushed
                    flow += pushed
                    if flow >= limit - eps:
                        break
                    # retreat to the first saturated edge on the path
                    keep = 0
                    while keep < len(path) and self.cap[path[keep]] > eps:
                        keep += 1
                    del path[keep:]
                    u = s if not path else self.to[path[-1]]
                    continue
                advanced = False
                while it[u] < len(self.adj[u]):
                    eid = self.adj[u][it[u]]
                    v = self.to[eid]
                    if self.cap[eid] > eps and level[v] == level[u] + 1:
                        path.append(eid)
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if advanced:
                    continue
                if u == s:
                    break  # blocking flow complete
                level[u] = -1
                eid = path.pop()
                u = s if not path else self.to[path[-1]]
                # the edge we backed over was unusable; move past it
        return flow


def _transport_feasible(angles_a, masses_a, angles_b, masses_b, eta: float) -> bool:
    """Whether mass 1 - eta can move between the measures along arcs of length <= eta."""
    na, nb = len(angles_a), len(angles_b)
    diff = np.abs(angles_a[:, None] - angles_b[None, :]) % 1.0
    dist = np.minimum(diff, 1.0 - diff)
    ia, ib = np.nonzero(dist <= eta + 1e-15)
    need = 1.0 - eta
    if need <= 0.0:
        return True
    net = _Dinic(na + nb + 2)
    src, snk = na + nb, na + nb + 1
    for i, m in enumerate(masses_a):
        net.add_edge(src, i, float(m))
    for j, m in enumerate(masses_b):
        net.add_edge(na + j, snk, float(m))
    for i, j in zip(ia, ib):
        net.add_edge(int(i), na + int(j), 2.0)
    return net.max_flow(src, snk, limit=need) >= need - 1e-12


def prokhorov_distance(
    mu: SpectralMeasure,
    nu: SpectralMeasure,
    *,
    tol: float = 1e-9,
    atomization: int = DEFAULT_ATOMIZATION,
) -> float:
    """Prokhorov distance via bisection on eta with a transport feasibility check.

    Uniform components are replaced by `atomization` equal atoms first.
    """
    mu = atomize(mu, atomization)
    nu = atomize(nu, atomization)
    if not mu.atoms or not nu.atoms:
        raise EmptyDataError("measures must carry atoms")
    aa, ma = mu.angles(), mu.masses()
    ab, mb = nu.angles(), nu.masses()
    if _transport_feasible(aa, ma, ab, mb, 0.0):
        return 0.0
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _transport_feasible(aa, ma, ab, mb, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# JSON measure schema
# ---------------------------------------------------------------------------


def measure_to_json(mu: SpectralMeasure) -> str:
    payload = {
        "atoms": [{"angle": a, "mass": m} for a, m in mu.atoms],
        "uniform_mass": mu.uniform_mass,
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def measure_from_json(text: str) -> SpectralMeasure:
    try:
        payload = json.loads(text)
        atoms = [(d["angle"], d["mass"]) for d in payload.get("atoms", [])]
        uniform = payload.get("uniform_mass", 0.0)
    except (json.JSONDecodeError, TypeError, KeyError) as exc:
        raise EmptyDataError(f"invalid measure JSON: {exc}") from exc
    return SpectralMeasure.from_atoms(atoms, uniform)


def save_measure(mu: SpectralMeasure, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(measure_to_json(mu) + "\n")


def load_measure(path) -> SpectralMeasure:
    with open(path, "r", encoding="ascii") as fh:
        return measure_from_json(fh.read())

"""Deterministic toral eigenfunctions, local blow-ups and arc-aggregated surrogates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .fields import TORUS, TrigField, c1_norm, square
from .lattice import LatticePointSet, lattice_points
from .measures import ArcBinning, arc_index, bin_measure, measure_from_coefficients

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CoefficientVector:
    """Complex weights over the lattice points of one energy level.

    Invariants: entry at -p is the conjugate of the entry at p, and the squared
    moduli sum to one.
    """

    energy: int
    entries: dict[tuple[int, int], complex]

    @property
    def points(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.entries))

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def max_mass(self) -> float:
        """Largest squared modulus among the entries."""
        return max(abs(a) ** 2 for a in self.entries.values())

    def validate(self, tol: float = 1e-10):
        norm = sum(abs(a) ** 2 for a in self.entries.values())
        if abs(norm - 1.0) > tol:
            raise PreconditionError(f"squared-modulus sum {norm} is not 1")
        for p, a in self.entries.items():
            q = (-p[0], -p[1])
            if q not in self.entries or abs(self.entries[q] - a.conjugate()) > tol:
                raise PreconditionError(f"entry at {p} has no conjugate partner at {q}")


def _positive_representatives(points):
    """One point per antipodal pair: the lexicographically larger one."""
    return [p for p in points if p > (-p[0], -p[1])]


def build_coefficients(
    points: LatticePointSet,
    kind: str = "equal",
    *,
    seed: int | None = None,
    values=None,
) -> CoefficientVector:
    """Construct a unit-norm conjugate-symmetric coefficient vector.

    kind = "equal":  every entry 1/sqrt(N).
    kind = "random": uniform on the sphere of conjugate-symmetric vectors,
                     deterministic per seed (needs N >= 2).
    kind = "explicit": `values` maps points to complex numbers; mild symmetry or
                     norm violations (beyond 1e-8) are rejected, then the vector
                     is symmetrised and renormalised exactly.
    """
    if not points.representable or points.energy == 0:
        raise PreconditionError(f"energy {points.energy} has no usable lattice points")
    if points.size % 2:
        raise PreconditionError("odd point count cannot satisfy conjugate symmetry")
    pts = points.points
    if kind == "equal":
        amp = 1.0 / math.sqrt(points.size)
        return CoefficientVector(points.energy, {p: complex(amp) for p in pts})
    if kind == "random":
        if points.size < 2:
            raise PreconditionError("random coefficients need at least one free pair")
        rng = np.random.default_rng(seed)
        entries: dict[tuple[int, int], complex] = {}
        for p in _positive_representatives(pts):
            re, im = rng.standard_normal(2)
            entries[p] = complex(re, im)
            entries[(-p[0], -p[1])] = complex(re, -im)
        norm = math.sqrt(sum(abs(a) ** 2 for a in entries.values()))
        entries = {p: a / norm for p, a in entries.items()}
        return CoefficientVector(points.energy, entries)
    if kind == "explicit":
        if values is None:
            raise PreconditionError("explicit coefficients need values")
        vals = dict(values)
        if set(vals) != set(pts):
            raise PreconditionError("explicit values must cover exactly the lattice points")
        norm = sum(abs(a) ** 2 for a in vals.values())
        if abs(norm - 1.0) > 1e-8:
            raise PreconditionError(f"explicit vector norm {norm} off by more than 1e-8")
        for p, a in vals.items():
            q = (-p[0], -p[1])
            if abs(vals[q] - a.conjugate()) > 1e-8:
                raise PreconditionError(f"explicit vector breaks conjugate symmetry at {p}")
        sym = {p: 0.5 * (vals[p] + vals[(-p[0], -p[1])].conjugate()) for p in vals}
        scale = math.sqrt(sum(abs(a) ** 2 for a in sym.values()))
        return CoefficientVector(points.energy, {p: a / scale for p, a in sym.items()})
    raise PreconditionError(f"unknown coefficient kind {kind!r}")


# ---------------------------------------------------------------------------
# Slowly growing comparison functions and the coefficient-flatness check
# ---------------------------------------------------------------------------


def slow_growth(name: str):
    """Parse '1', 'const:<c>', 'log' or 'log^<p>' into a callable g(x)."""
    name = name.strip()
    if name.startswith("const:"):
        c = float(name.split(":", 1)[1])
        return lambda x: c
    if name == "log":
        return lambda x: max(math.log(x), 0.0)
    if name.startswith("log^"):
        p = float(name[4:])
        return lambda x: max(math.log(x), 0.0) ** p
    try:
        c = float(name)
    except ValueError:
        raise PreconditionError(f"unknown growth function {name!r}") from None
    return lambda x: c


@dataclass(frozen=True)
class FlatnessCheck:
    max_mass: float
    bound: float
    passes: bool


def class_A_check(coeffs: CoefficientVector, g="1") -> FlatnessCheck:
    """Does max |a|^2 stay below g(N)/N for the given slowly growing g?"""
    fn = slow_growth(g) if isinstance(g, str) else g
    m = coeffs.max_mass
    bound = fn(coeffs.size) / coeffs.size
    return FlatnessCheck(m, bound, m <= bound)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


def toral_field(coeffs: CoefficientVector) -> TrigField:
    pts = coeffs.points
    freqs = np.array(pts, dtype=float)
    amps = np.array([coeffs.entries[p] for p in pts])
    return TrigField(freqs, amps, wavenumber=math.sqrt(coeffs.energy), domain=TORUS)


def evaluate_f(coeffs: CoefficientVector, x, *, imag_tol: float = 1e-10) -> float:
    """Value at one torus point; the imaginary residue must stay below imag_tol."""
    field = toral_field(coeffs)
    v = field.complex_values(np.asarray(x, dtype=float))
    if abs(float(np.max(np.abs(np.atleast_1d(v).imag)))) > imag_tol:
        raise PreconditionError("imaginary part above tolerance; vector not symmetric?")
    return float(np.real(v))


def blow_up_field(coeffs: CoefficientVector, x, R: float) -> TrigField:
    """Local rescaling y -> f(x + R y / sqrt(E)) on (-1, 1)^2."""
    e = coeffs.energy
    if not 1.0 < R < math.sqrt(e):
        raise PreconditionError(f"R={R} outside (1, sqrt({e}))")
    pts = coeffs.points
    xi = np.array(pts, dtype=float)
    phase = np.exp(1j * TWO_PI * (xi @ np.asarray(x, dtype=float)))
    amps = np.array([coeffs.entries[p] for p in pts]) * phase
    freqs = R * xi / math.sqrt(e)
    return TrigField(freqs, amps, wavenumber=R, domain=square(1.0))


# ---------------------------------------------------------------------------
# Arc gathering
# ---------------------------------------------------------------------------


def arc_point_sets(points: LatticePointSet, K: int) -> dict[int, list[tuple[int, int]]]:
    """Lattice points grouped by the arc their direction falls in."""
    out: dict[int, list[tuple[int, int]]] = {}
    for p in points.points:
        angle = math.atan2(p[1], p[0]) / TWO_PI
        out.setdefault(arc_index(angle, K), []).append(p)
    return out


def arc_coefficients(coeffs: CoefficientVector, binning: ArcBinning, x) -> dict[int, complex]:
    """Aggregated arc weights at x, normalised to unit mean square over the torus."""
    pts = lattice_points(coeffs.energy)
    groups = arc_point_sets(pts, binning.K)
    x = np.asarray(x, dtype=float)
    out: dict[int, complex] = {}
    for k in binning.kset:
        members = groups.get(k, [])
        mass = binning.arc_masses[k]
        acc = sum(coeffs.entries[p] * np.exp(1j * TWO_PI * (p[0] * x[0] + p[1] * x[1])) for p in members)
        out[k] = complex(acc / math.sqrt(mass))
    return out


@dataclass(frozen=True)
class LocalDecomposition:
    """Split of a blow-up into surrogate, out-of-support leftover and gathering residual."""

    x: tuple[float, float]
    R: float
    binning: ArcBinning
    bk: dict[int, complex]
    phi: TrigField
    leftover: TrigField
    residual: TrigField

    def blowup(self) -> TrigField:
        return self.leftover + self.phi + self.residual


def gather_local(
    coeffs: CoefficientVector,
    x,
    R: float,
    K: int,
    delta: float,
    *,
    binning: ArcBinning | None = None,
) -> LocalDecomposition:
    e = coeffs.energy
    if not 1.0 < R < math.sqrt(e):
        raise PreconditionError(f"R={R} outside (1, sqrt({e}))")
    if binning is None:
        binning = bin_measure(measure_from_coefficients(lattice_points(e), coeffs), K, delta)
    if binning.degenerate:
        raise PreconditionError("degenerate binning: no arc reaches the mass threshold")
    x = np.asarray(x, dtype=float)
    sqrt_e = math.sqrt(e)
    pts = lattice_points(e)
    groups = arc_point_sets(pts, binning.K)
    kept = set(binning.kset)

    bk = arc_coefficients(coeffs, binning, x)

    phi_freqs = np.array([binning.midpoints[k] for k in binning.kset], dtype=float) * R
    phi_coeffs = np.array(
        [math.sqrt(binning.arc_masses[k]) * bk[k] for k in binning.kset], dtype=complex
    )
    phi = TrigField(phi_freqs, phi_coeffs, wavenumber=R, domain=square(1.0))

    def _blow_terms(members):
        if not members:
            return np.zeros((0, 2)), np.zeros(0, dtype=complex)
        xi = np.array(members, dtype=float)
        phase = np.exp(1j * TWO_PI * (xi @ x))
        amps = np.array([coeffs.entries[p] for p in members]) * phase
        return R * xi / sqrt_e, amps

    out_members = [p for k, ms in groups.items() if k not in kept for p in ms]
    lf, lc = _blow_terms(out_members)
    leftover = TrigField(lf, lc, wavenumber=R, domain=square(1.0)) if len(lc) else TrigField(
        np.zeros((1, 2)), np.zeros(1, dtype=complex), wavenumber=R, domain=square(1.0)
    )

    in_members = [p for k in binning.kset for p in groups.get(k, [])]
    gf, gc = _blow_terms(in_members)
    gathered = TrigField(gf, gc, wavenumber=R, domain=square(1.0))
    residual = gathered - phi

    return LocalDecomposition(tuple(float(v) for v in x), R, binning, bk, phi, leftover, residual)


@dataclass(frozen=True)
class ResidualStats:
    """Monte Carlo squared-C1 norms of the two gathering errors and their scale bounds."""

    mean_leftover_sq: float
    stderr_leftover: float
    mean_residual_sq: float
    stderr_residual: float
    bound_leftover: float
    bound_residual: float
    samples: int

    @property
    def ratio_leftover(self) -> float:
        return self.mean_leftover_sq / self.bound_leftover

    @property
    def ratio_residual(self) -> float:
        return self.mean_residual_sq / self.bound_residual


def residual_statistics(
    coeffs: CoefficientVector,
    R: float,
    K: int,
    delta: float,
    x_samples: int,
    seed: int,
    *,
    grid_step: float = 0.01,
) -> ResidualStats:
    if x_samples < 16:
        raise PreconditionError("x_samples must be at least 16")
    rng = np.random.default_rng(seed)
    binning = bin_measure(
        measure_from_coefficients(lattice_points(coeffs.energy), coeffs), K, delta
    )
    left_sq = np.empty(x_samples)
    res_sq = np.empty(x_samples)
    for i in range(x_samples):
        x = rng.random(2)
        dec = gather_local(coeffs, x, R, K, delta, binning=binning)
        left_sq[i] = c1_norm(dec.leftover, grid_step) ** 2
        res_sq[i] = c1_norm(dec.residual, grid_step) ** 2
    return ResidualStats(
        mean_leftover_sq=float(left_sq.mean()),
        stderr_leftover=float(left_sq.std(ddof=1) / math.sqrt(x_samples)),
        mean_residual_sq=float(res_sq.mean()),
        stderr_residual=float(res_sq.std(ddof=1) / math.sqrt(x_samples)),
        bound_leftover=float(R**6 * delta * K),
        bound_residual=float(R**8 / K**2),
        samples=x_samples,
    )


# ---------------------------------------------------------------------------
# Coefficient CSV format: rows "xi1,xi2,re,im"
# ---------------------------------------------------------------------------


def save_coefficients(coeffs: CoefficientVector, path):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("xi1,xi2,re,im\n")
        for p in coeffs.points:
            a = coeffs.entries[p]
            fh.write(f"{p[0]},{p[1]},{a.real!r},{a.imag!r}\n")


def load_coefficients(path) -> CoefficientVector:
    entries: dict[tuple[int, int], complex] = {}
    energies = set()
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("xi1"):
                continue
            x, y, re, im = line.split(",")
            p = (int(x), int(y))
            entries[p] = complex(float(re), float(im))
            energies.add(p[0] ** 2 + p[1] ** 2)
    if not entries:
        raise PreconditionError("coefficient file has no rows")
    if len(energies) != 1:
        raise PreconditionError(f"points lie on several circles: {sorted(energies)}")
    energy = energies.pop()
    cv = CoefficientVector(energy, entries)
    cv.validate(tol=1e-8)
    return cv

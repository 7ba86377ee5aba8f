"""Gaussian monochromatic waves: sampling, nodal density estimation, line statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, UnresolvedCensusError
from .fields import Domain, PlanarField, TrigField, square
from .measures import ArcBinning, SpectralMeasure, antipode, circle_distance, unit_vector
from .nodal import count_nodal_domains

TWO_PI = 2.0 * np.pi
SAMPLES_PER_WAVELENGTH = 16


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    # Counter-based derivation keeps trials reproducible and order-independent.
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial),)))


def _antipodal_pairs(mu: SpectralMeasure):
    """(angle, mass) for one representative per antipodal atom pair (angle in (0, 1/2])."""
    pairs = []
    for angle, mass in mu.atoms:
        if angle <= 0.0:
            partner = antipode(angle)
            if not any(circle_distance(a, partner) <= 1e-9 for a, _ in mu.atoms):
                raise PreconditionError(f"measure not symmetric: no partner for atom {angle}")
            continue
        pairs.append((angle, mass))
    if 2 * len(pairs) != len(mu.atoms):
        raise PreconditionError("measure not symmetric under the antipodal map")
    return pairs


@dataclass(frozen=True)
class GaussianCoefficientSample:
    """Standard complex Gaussian weights, one free coefficient per atom pair."""

    pair_angles: tuple[float, ...]
    pair_masses: tuple[float, ...]
    coefficients: tuple[complex, ...]
    seed: object


def sample_coefficients(mu: SpectralMeasure, rng: np.random.Generator, seed=None) -> GaussianCoefficientSample:
    pairs = _antipodal_pairs(mu)
    z = rng.standard_normal((len(pairs), 2)) * math.sqrt(0.5)
    coeffs = tuple(complex(a, b) for a, b in z)
    return GaussianCoefficientSample(
        tuple(a for a, _ in pairs), tuple(m for _, m in pairs), coeffs, seed
    )


def field_from_sample(sample: GaussianCoefficientSample, wavenumber: float, domain: Domain | None = None) -> TrigField:
    freqs = []
    coeffs = []
    for angle, mass, c in zip(sample.pair_angles, sample.pair_masses, sample.coefficients):
        ux, uy = unit_vector(angle)
        freqs.append((wavenumber * ux, wavenumber * uy))
        coeffs.append(math.sqrt(mass) * c)
        freqs.append((-wavenumber * ux, -wavenumber * uy))
        coeffs.append(math.sqrt(mass) * c.conjugate())
    return TrigField(
        np.array(freqs), np.array(coeffs), wavenumber=wavenumber, domain=domain or square(2.0)
    )


def sample_field(mu: SpectralMeasure, wavenumber: float, seed) -> TrigField:
    """One realisation of the stationary Gaussian field with spectral measure mu.

    The field has unit variance (the measure has total mass one) and covariance
    sum_k m_k cos(2*pi*wavenumber*<u_k, y - y'>).
    """
    if not mu.is_atomic:
        raise PreconditionError("sampling needs an atomic measure; atomize the uniform part first")
    if wavenumber <= 0:
        raise PreconditionError("wavenumber must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return field_from_sample(sample_coefficients(mu, rng, seed), wavenumber)


# ---------------------------------------------------------------------------
# Nodal density estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CnsEstimate:
    """Monte Carlo nodal-domain density of a Gaussian wave at window radius R."""

    measure_id: str
    R: float
    convention: str  # "square": count in (-R, R)^2, area 4R^2; "disc": area pi R^2
    trials: int
    counts: tuple[int, ...]
    area: float
    estimate: float
    stderr: float
    discarded: int
    seed: int

    @staticmethod
    def from_counts(measure_id, R, convention, counts, area, discarded, seed) -> "CnsEstimate":
        arr = np.array(counts, dtype=float)
        est = float(arr.mean() / area)
        se = float(arr.std(ddof=1) / math.sqrt(len(arr)) / area) if len(arr) > 1 else float("inf")
        return CnsEstimate(
            measure_id, R, convention, len(counts), tuple(int(c) for c in counts),
            area, est, se, discarded, seed,
        )


def _disc_interior_count(census_) -> int:
    R = census_.domain.side / 2.0
    count = 0
    for comp in census_.components:
        if comp.touches_boundary:
            continue
        x0, wx = comp.span_x
        y0, wy = comp.span_y
        corners = ((x0, y0), (x0 + wx, y0), (x0, y0 + wy), (x0 + wx, y0 + wy))
        if all(math.hypot(cx, cy) < R for cx, cy in corners):
            count += 1
    return count


def estimate_cns(
    mu: SpectralMeasure,
    R: float,
    trials: int,
    seed: int,
    convention: str = "square",
    *,
    measure_id: str = "measure",
    samples_per_wavelength: int = SAMPLES_PER_WAVELENGTH,
    max_resolution: int = 8192,
    stability: str = "tolerant",
) -> CnsEstimate:
    """Per-trial counts of nodal domains contained in the counting window.

    Unresolved trials are discarded; more than 10% discards aborts the estimate.
    """
    if trials < 8:
        raise PreconditionError("need at least 8 trials")
    if convention not in ("square", "disc"):
        raise PreconditionError("convention must be 'square' or 'disc'")
    domain = square(2.0 * R)
    resolution = max(128, int(math.ceil(samples_per_wavelength * 2.0 * R)))
    counts = []
    discarded = 0
    for trial in range(trials):
        rng = _trial_rng(seed, trial)
        field = sample_field(mu, 1.0, rng)
        field.domain = domain
        try:
            cen = count_nodal_domains(
                field, domain, resolution, max_resolution=max_resolution, stability=stability
            )
        except UnresolvedCensusError:
            discarded += 1
            if discarded > 0.1 * trials:
                raise
            continue
        counts.append(cen.count_interior if convention == "square" else _disc_interior_count(cen))
    area = 4.0 * R * R if convention == "square" else math.pi * R * R
    return CnsEstimate.from_counts(measure_id, R, convention, counts, area, discarded, seed)


# ---------------------------------------------------------------------------
# Zero crossings along lines
# ---------------------------------------------------------------------------


def kac_rice_line_intensity(mu: SpectralMeasure, direction, wavenumber: float = 1.0) -> float:
    """Expected zeros per unit length along a line: 2*nu*sqrt(int <v, theta>^2 dmu)."""
    v = np.asarray(direction, dtype=float)
    norm = math.hypot(v[0], v[1])
    if norm == 0:
        raise PreconditionError("direction must be a nonzero vector")
    v = v / norm
    acc = 0.0
    for angle, mass in mu.atoms:
        ux, uy = unit_vector(angle)
        acc += mass * (v[0] * ux + v[1] * uy) ** 2
    acc += 0.5 * mu.uniform_mass
    return 2.0 * wavenumber * math.sqrt(acc)


def zero_crossing_rate_mc(
    mu: SpectralMeasure,
    n_segments: int,
    seed: int,
    *,
    wavenumber: float = 1.0,
    direction=None,
    samples_per_unit: int = 512,
    segment_length: float = 1.0,
) -> tuple[float, float]:
    """Monte Carlo zeros-per-unit-length over unit segments; returns (mean, stderr).

    Each segment gets a fresh field realisation, so segment counts are independent.
    """
    counts = np.empty(n_segments)
    t = np.linspace(0.0, segment_length, int(samples_per_unit * segment_length) + 1)
    for i in range(n_segments):
        rng = _trial_rng(seed, i)
        field = sample_field(mu, wavenumber, rng)
        base = rng.uniform(-0.5, 0.5, 2)
        if direction is None:
            phi = rng.uniform(0.0, TWO_PI)
            d = np.array([math.cos(phi), math.sin(phi)])
        else:
            d = np.asarray(direction, dtype=float)
            d = d / math.hypot(d[0], d[1])
        pts = base[None, :] + t[:, None] * d[None, :]
        vals = field.values(pts)
        counts[i] = int(np.sum(np.sign(vals[1:]) * np.sign(vals[:-1]) < 0))
    rate = counts / segment_length
    return float(rate.mean()), float(rate.std(ddof=1) / math.sqrt(n_segments))


# ---------------------------------------------------------------------------
# Degeneracy and barrier diagnostics
# ---------------------------------------------------------------------------


def degeneracy_det(binning: ArcBinning) -> float:
    """sum_{k,k'} m_k m_k' sin^2(phi_k - phi_k') over kept arcs (normalised masses).

    Vanishes exactly when the positive arc set is a singleton (the gradient
    covariance is then rank one).
    """
    if binning.degenerate:
        raise PreconditionError("degenerate binning")
    ks = binning.kset
    masses = np.array([binning.normalised_mass(k) for k in ks])
    phis = np.array([math.atan2(*binning.midpoints[k][::-1]) for k in ks])
    diff = phis[:, None] - phis[None, :]
    return float(np.einsum("i,j,ij->", masses, masses, np.sin(diff) ** 2))


def barrier_statistic(field: PlanarField, domain: Domain | None = None, resolution: int = 512) -> float:
    """Grid minimum over the square of max(|h|, |grad h|)."""
    domain = domain or field.domain
    if domain.kind != "square":
        raise PreconditionError("barrier statistic is defined over a square window")
    half = domain.side / 2.0
    xs = np.linspace(domain.center[0] - half, domain.center[0] + half, resolution)
    ys = np.linspace(domain.center[1] - half, domain.center[1] + half, resolution)
    vals = np.abs(field.grid(xs, ys))
    gx, gy = field.grid_gradient(xs, ys)
    return float(np.maximum(vals, np.hypot(gx, gy)).min())


@dataclass(frozen=True)
class PerturbationTrial:
    base_count: int
    perturbed_count: int
    boundary_band_count: int

    @property
    def within_bound(self) -> bool:
        return abs(self.perturbed_count - self.base_count) <= self.boundary_band_count


@dataclass(frozen=True)
class PerturbationReport:
    epsilon: float
    barrier: float
    trials: tuple[PerturbationTrial, ...]
    worst_change: int

    @property
    def all_within_bound(self) -> bool:
        return all(t.within_bound for t in self.trials)


def _band_component_count(census_, band: float) -> int:
    """Components whose covering box comes within `band` of the window boundary."""
    dom = census_.domain
    half = dom.side / 2.0
    n = 0
    for comp in census_.components:
        if comp.touches_boundary:
            n += 1
            continue
        x0, wx = comp.span_x
        y0, wy = comp.span_y
        lo_x, hi_x = x0 - (dom.center[0] - half), (dom.center[0] + half) - (x0 + wx)
        lo_y, hi_y = y0 - (dom.center[1] - half), (dom.center[1] + half) - (y0 + wy)
        if min(lo_x, hi_x, lo_y, hi_y) < band:
            n += 1
    return n


def perturbation_stability(
    field: TrigField,
    epsilon: float,
    trials: int,
    seed: int,
    *,
    domain: Domain | None = None,
    resolution: int | None = None,
    max_frequency: int = 3,
    barrier: float | None = None,
) -> PerturbationReport:
    """Count stability under random smooth perturbations of sup norm epsilon.

    The per-trial bound is the number of components within epsilon/barrier of
    the window boundary: those are the only ones a small perturbation can push
    across the counting edge.
    """
    domain = domain or field.domain
    if domain.kind != "square":
        raise PreconditionError("perturbation stability runs on a square window")
    if barrier is None:
        barrier = barrier_statistic(field, domain)
    if epsilon < 0:
        raise PreconditionError("epsilon must be non-negative")
    if epsilon >= barrier / 4.0 and epsilon > 0.0:
        raise PreconditionError(f"epsilon {epsilon} must stay below barrier/4 = {barrier / 4.0}")
    if resolution is None:
        resolution = max(128, int(math.ceil(SAMPLES_PER_WAVELENGTH * field.wavenumber * domain.side)))
    base = count_nodal_domains(field, domain, resolution, stability="tolerant")
    band = epsilon / barrier if barrier > 0 else 0.0
    band_count = _band_component_count(base, band)
    out = []
    worst = 0
    for trial in range(trials):
        if epsilon == 0.0:
            pert_count = base.count_interior
        else:
            rng = _trial_rng(seed, trial)
            freqs = []
            coeffs = []
            for mx in range(-max_frequency, max_frequency + 1):
                for my in range(-max_frequency, max_frequency + 1):
                    if (mx, my) <= (0, 0):
                        continue
                    z = complex(*rng.standard_normal(2))
                    freqs.extend([(mx, my), (-mx, -my)])
                    coeffs.extend([z, z.conjugate()])
            raw = TrigField(np.array(freqs, dtype=float) / domain.side, np.array(coeffs))
            xs = np.linspace(domain.center[0] - domain.side / 2, domain.center[0] + domain.side / 2, 128)
            sup = float(np.abs(raw.grid(xs, xs)).max())
            pert = raw.scaled(epsilon / sup)
            shaken = field + pert
            shaken.domain = domain
            cen = count_nodal_domains(shaken, domain, resolution, stability="tolerant")
            pert_count = cen.count_interior
        out.append(PerturbationTrial(base.count_interior, pert_count, band_count))
        worst = max(worst, abs(pert_count - base.count_interior))
    return PerturbationReport(epsilon, barrier, tuple(out), worst)

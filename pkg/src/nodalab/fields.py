"""Planar fields given as finite sums of complex exponentials, with analytic gradients.

Every field in this package is real-valued because its (frequency, coefficient)
pairs come in conjugate-symmetric pairs; evaluation keeps the real part and the
imaginary residue is available for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

TWO_PI = 2.0 * np.pi

# Irrational sampling offset: keeps structured grids off the exact zero lines of
# rational trigonometric fields, so sampled signs are well defined.
GRID_OFFSET = 1.0 / np.pi


@dataclass(frozen=True)
class Domain:
    """Region a field is naturally counted on: the unit torus or a planar square."""

    kind: str  # "torus" | "square"
    side: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)


TORUS = Domain("torus", 1.0, (0.5, 0.5))


def square(side: float, center=(0.0, 0.0)) -> Domain:
    return Domain("square", float(side), (float(center[0]), float(center[1])))


def grid_axes(domain: Domain, n: int, offset: float = GRID_OFFSET):
    """Cell-centre sample coordinates along each axis for an n x n grid."""
    frac = (np.arange(n) + offset) / n
    if domain.kind == "torus":
        return frac, frac
    half = domain.side / 2.0
    xs = domain.center[0] - half + domain.side * frac
    ys = domain.center[1] - half + domain.side * frac
    return xs, ys


class PlanarField:
    """Interface: real values and analytic gradients at arbitrary planar points."""

    wavenumber: float
    domain: Domain

    def values(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grid(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
        return self.values(pts).reshape(len(xs), len(ys))

    def grid_gradient(self, xs: np.ndarray, ys: np.ndarray):
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
        g = self.gradient(pts)
        shape = (len(xs), len(ys))
        return g[..., 0].reshape(shape), g[..., 1].reshape(shape)

    def __call__(self, pts):
        return self.values(np.asarray(pts, dtype=float))


class TrigField(PlanarField):
    """Sum of c_t * e^(2*pi*i*<f_t, y>) over finitely many terms, kept real."""

    def __init__(self, freqs, coeffs, wavenumber=None, domain: Domain = TORUS):
        self.freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
        self.coeffs = np.asarray(coeffs, dtype=complex).ravel()
        if self.freqs.shape != (self.coeffs.size, 2):
            raise PreconditionError("freqs must be (m, 2) matching m coefficients")
        if wavenumber is None:
            norms = np.hypot(self.freqs[:, 0], self.freqs[:, 1])
            wavenumber = float(norms.max()) if norms.size else 0.0
        self.wavenumber = float(wavenumber)
        self.domain = domain

    # -- pointwise ---------------------------------------------------------
    def _phase(self, pts):
        return np.exp(1j * TWO_PI * (np.asarray(pts, dtype=float) @ self.freqs.T))

    def values(self, pts):
        return (self._phase(pts) @ self.coeffs).real

    def complex_values(self, pts):
        return self._phase(pts) @ self.coeffs

    def max_imag(self, pts) -> float:
        v = self.complex_values(pts)
        return float(np.max(np.abs(v.imag))) if v.size else 0.0

    def gradient(self, pts):
        e = self._phase(pts)
        gx = e @ (self.coeffs * 1j * TWO_PI * self.freqs[:, 0])
        gy = e @ (self.coeffs * 1j * TWO_PI * self.freqs[:, 1])
        return np.stack([gx.real, gy.real], axis=-1)

    # -- separable fast path on Cartesian grids ----------------------------
    def _grid_apply(self, xs, ys, coeffs):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        e1 = np.exp(1j * TWO_PI * np.outer(xs, self.freqs[:, 0]))
        e2 = np.exp(1j * TWO_PI * np.outer(self.freqs[:, 1], ys))
        block = max(1, int(16_000_000 // max(len(xs), 1)))
        out = np.empty((len(xs), len(ys)))
        weighted = e1 * coeffs
        for j0 in range(0, len(ys), block):
            out[:, j0 : j0 + block] = (weighted @ e2[:, j0 : j0 + block]).real
        return out

    def grid(self, xs, ys):
        return self._grid_apply(xs, ys, self.coeffs)

    def grid_gradient(self, xs, ys):
        gx = self._grid_apply(xs, ys, self.coeffs * 1j * TWO_PI * self.freqs[:, 0])
        gy = self._grid_apply(xs, ys, self.coeffs * 1j * TWO_PI * self.freqs[:, 1])
        return gx, gy

    # -- algebra ------------------------------------------------------------
    def __add__(self, other: "TrigField") -> "TrigField":
        return TrigField(
            np.vstack([self.freqs, other.freqs]),
            np.concatenate([self.coeffs, other.coeffs]),
            wavenumber=max(self.wavenumber, other.wavenumber),
            domain=self.domain,
        )

    def __sub__(self, other: "TrigField") -> "TrigField":
        return self + other.scaled(-1.0)

    def scaled(self, factor: complex) -> "TrigField":
        return TrigField(self.freqs, self.coeffs * factor, self.wavenumber, self.domain)


def constant_field(value: float, domain: Domain = TORUS) -> TrigField:
    return TrigField(np.zeros((1, 2)), np.array([value + 0j]), wavenumber=0.0, domain=domain)


class CallableField(PlanarField):
    """Adapter for ad-hoc evaluators with supplied analytic gradients."""

    def __init__(self, fn, grad, wavenumber: float, domain: Domain = TORUS):
        self.fn = fn
        self.grad = grad
        self.wavenumber = float(wavenumber)
        self.domain = domain

    def values(self, pts):
        return np.asarray(self.fn(np.asarray(pts, dtype=float)), dtype=float)

    def gradient(self, pts):
        return np.asarray(self.grad(np.asarray(pts, dtype=float)), dtype=float)


def c1_norm(field: PlanarField, grid_step: float = 0.01, half_side: float = 1.0) -> float:
    """sup|f| + sup|d1 f| + sup|d2 f| over a uniform grid on the square (-h, h)^2."""
    if grid_step > 1e-2 + 1e-15:
        raise PreconditionError("grid_step must be at most 1e-2")
    npts = int(round(2.0 * half_side / grid_step)) + 1
    xs = np.linspace(-half_side, half_side, npts)
    vals = field.grid(xs, xs)
    gx, gy = field.grid_gradient(xs, xs)
    return float(np.abs(vals).max() + np.abs(gx).max() + np.abs(gy).max())

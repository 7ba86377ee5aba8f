"""Quasi-random arc-coefficient moments against Gaussian references."""

import math

import numpy as np
import pytest

from nodalab import eigenfunctions as eig
from nodalab import lattice as lat
from nodalab import measures as ms
from nodalab import moments as mo
from nodalab.errors import BudgetExceededError, PreconditionError


def spec(r, s):
    return mo.MomentSpec.from_maps(r, s)


@pytest.fixture(scope="module")
def setup25():
    cv = eig.build_coefficients(lat.lattice_points(25), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(25), cv)
    return cv, ms.bin_measure(mu, 8, 1e-3)


def test_gaussian_joint_moment_values():
    assert mo.gaussian_joint_moment(spec({1: 1}, {1: 1})) == 1.0
    assert mo.gaussian_joint_moment(spec({1: 2, 2: 1}, {1: 2, 2: 1})) == 2.0
    assert mo.gaussian_joint_moment(spec({1: 1}, {})) == 0.0
    assert mo.gaussian_joint_moment(spec({1: 2}, {1: 2})) == 2.0
    assert mo.gaussian_joint_moment(spec({1: 3}, {1: 3})) == 6.0


def test_gaussian_moments_match_simulation():
    rng = np.random.default_rng(17)
    n = 200_000
    c = (rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))) * math.sqrt(0.5)
    for sp in mo.enumerate_specs((1, 2), 4):
        prod = np.ones(n, dtype=complex)
        for arc_idx, (rk, sk) in zip((0, 1), sp.powers):
            if rk:
                prod *= c[:, arc_idx] ** rk
            if sk:
                prod *= np.conj(c[:, arc_idx]) ** sk
        emp = prod.mean()
        se = prod.std(ddof=1) / math.sqrt(n)
        assert abs(emp - mo.gaussian_joint_moment(sp)) <= max(3 * se, 1e-12)


def test_second_moment_is_one(setup25):
    cv, binning = setup25
    k = [k for k in binning.kset if k >= 1][0]
    mv = mo.arc_moment_exact(cv, binning, spec({k: 1}, {k: 1}))
    assert mv.value == pytest.approx(1.0)
    assert mv.diagonal == pytest.approx(1.0)
    assert abs(mv.off_diagonal) < 1e-15


def test_first_moment_is_zero(setup25):
    cv, binning = setup25
    k = [k for k in binning.kset if k >= 1][0]
    assert mo.arc_moment_exact(cv, binning, spec({k: 1}, {})).value == 0.0


def test_empty_spec_is_one(setup25):
    cv, binning = setup25
    sp = mo.MomentSpec((), ())
    assert mo.arc_moment_quadrature(cv, binning, sp) == pytest.approx(1.0)


def test_hermitian_swap_conjugates(setup25):
    cv, binning = setup25
    pos = [k for k in binning.kset if k >= 1]
    sp = spec({pos[0]: 2, pos[1]: 1}, {pos[0]: 1})
    a = mo.arc_moment_exact(cv, binning, sp).value
    b = mo.arc_moment_exact(cv, binning, sp.conjugate()).value
    assert a == pytest.approx(np.conj(b))


def test_exact_equals_quadrature_at_exactness_grid(setup25):
    cv, binning = setup25
    pos = [k for k in binning.kset if k >= 1]
    for sp in mo.enumerate_specs(pos[:3], 3):
        ex = mo.arc_moment_exact(cv, binning, sp).value
        qd = mo.arc_moment_quadrature(cv, binning, sp)
        assert ex == pytest.approx(qd, abs=1e-12)


def test_quadrature_warns_below_threshold(setup25):
    cv, binning = setup25
    k = [k for k in binning.kset if k >= 1][0]
    with pytest.warns(UserWarning):
        mo.arc_moment_quadrature(cv, binning, spec({k: 1}, {k: 1}), grid=5)


def test_off_diagonal_vanishes_without_relations():
    # Any same-circle relation x1 + x2 = x3 + x4 forces {x1,x2} = {x3,x4}
    # (two circles meet in at most two points), so order-4 off-diagonals on a
    # single positive arc can only come from repetition patterns, which the
    # diagonal already owns.
    cv = eig.build_coefficients(lat.lattice_points(65), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(65), cv)
    binning = ms.bin_measure(mu, 2, 1e-3)
    sp = spec({1: 2}, {1: 2})
    mv = mo.arc_moment_exact(cv, binning, sp)
    assert abs(mv.off_diagonal) < 1e-12
    assert mv.off_diagonal_tuples == 0


def test_sweep_baseline_single_frequency_arcs():
    # One frequency pair per arc keeps |b| constant, so the fourth absolute
    # moment stays 1 against the Gaussian 2: the sweep gap is pinned at 1.
    cv = eig.build_coefficients(lat.lattice_points(1), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(1), cv)
    binning = ms.bin_measure(mu, 2, 1e-3)
    sweep = mo.moment_gap_sweep(cv, binning, 5)
    assert sweep.max_gap == pytest.approx(1.0)


def test_sweep_gap_decreases_with_arc_population():
    gaps = []
    for e, expected in ((25, 1 / 3), (65, 1 / 4), (325, 1 / 6), (1105, 1 / 8)):
        cv = eig.build_coefficients(lat.lattice_points(e), "equal")
        mu = ms.measure_from_coefficients(lat.lattice_points(e), cv)
        binning = ms.bin_measure(mu, 2, 1e-3)
        sweep = mo.moment_gap_sweep(cv, binning, 5)
        # Fourth-moment deficit of a flat m-point arc sum is exactly 1/m.
        assert sweep.max_gap == pytest.approx(expected, abs=1e-12)
        gaps.append(sweep.max_gap)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_order2_gap_shape(setup25):
    # Order-2 specs are exact (gap 0), consistent with the flatness/threshold
    # scale M/delta controlling only the repetition corrections.
    cv, binning = setup25
    pos = [k for k in binning.kset if k >= 1]
    for sp in mo.enumerate_specs(pos, 2):
        row_gap = abs(mo.gaussian_joint_moment(sp) - mo.arc_moment_exact(cv, binning, sp).value)
        assert row_gap < 1e-12


def test_budget_guard():
    cv = eig.build_coefficients(lat.lattice_points(25), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(25), cv)
    binning = ms.bin_measure(mu, 2, 1e-3)  # three frequencies per positive arc
    with pytest.raises(BudgetExceededError):
        mo.arc_moment_exact(cv, binning, spec({1: 2}, {1: 2}), tuple_budget=10)


# ---------------------------------------------------------------------------
# Cube probabilities
# ---------------------------------------------------------------------------


def test_cube_gap_near_gaussian():
    cv = eig.build_coefficients(lat.lattice_points(325), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(325), cv)
    binning = ms.bin_measure(mu, 1, 1e-3)
    rep = mo.cube_probability_gap(cv, binning, 4.0, 1.0, 100_000, seed=9)
    assert rep.kappa == 1
    assert rep.max_gap <= 3 * rep.stderr_ceiling


def test_cube_gap_negative_control():
    pts = lat.lattice_points(25)
    vals = {p: 0.0 for p in pts.points}
    vals[(3, 4)] = 1 / math.sqrt(2)
    vals[(-3, -4)] = 1 / math.sqrt(2)
    cv = eig.build_coefficients(pts, "explicit", values=vals)
    mu = ms.measure_from_coefficients(pts, cv)
    binning = ms.bin_measure(mu, 1, 1e-3)
    rep = mo.cube_probability_gap(cv, binning, 4.0, 1.0, 50_000, seed=9)
    # constant-modulus arc coefficient: mass sits on a circle, not a Gaussian
    assert rep.max_gap > 10 * rep.stderr_ceiling


def test_cube_gap_tiny_window():
    cv = eig.build_coefficients(lat.lattice_points(325), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(325), cv)
    binning = ms.bin_measure(mu, 1, 1e-3)
    rep = mo.cube_probability_gap(cv, binning, 1e-4, 2.5e-5, 5_000, seed=2)
    assert rep.max_gap < 1e-6 and rep.big_cube_gap < 1e-6


def test_cube_budget_guard():
    cv = eig.build_coefficients(lat.lattice_points(325), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(325), cv)
    binning = ms.bin_measure(mu, 8, 1e-3)
    with pytest.raises(BudgetExceededError):
        mo.cube_probability_gap(cv, binning, 4.0, 0.25, 100, seed=1)


def test_cube_monte_carlo_reference():
    cv = eig.build_coefficients(lat.lattice_points(325), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(325), cv)
    binning = ms.bin_measure(mu, 1, 1e-3)
    rep = mo.cube_probability_gap(cv, binning, 4.0, 1.0, 20_000, seed=3, gaussian_trials=200_000)
    assert rep.max_gap <= 5 * rep.stderr_ceiling


# ---------------------------------------------------------------------------
# Jacobian determinant
# ---------------------------------------------------------------------------


def test_jacobian_single_frequency_arc_vanishes(setup25):
    cv, binning = setup25
    k = [k for k in binning.kset if k >= 1][0]
    rng = np.random.default_rng(4)
    for _ in range(10):
        assert mo.arc_jacobian_det(cv, binning, k, rng.random(2)) == pytest.approx(0.0)


def test_jacobian_two_frequency_arc_not_identically_zero():
    cv = eig.build_coefficients(lat.lattice_points(25), "equal")
    mu = ms.measure_from_coefficients(lat.lattice_points(25), cv)
    binning = ms.bin_measure(mu, 2, 1e-3)  # three frequencies per positive arc
    grid = np.arange(64) / 64
    best = max(
        abs(mo.arc_jacobian_det(cv, binning, 1, (x, y))) for x in grid for y in grid
    )
    assert best > 1e-8


def test_jacobian_matches_finite_differences():
    cv = eig.build_coefficients(lat.lattice_points(325), "random", seed=1)
    mu = ms.measure_from_coefficients(lat.lattice_points(325), cv)
    binning = ms.bin_measure(mu, 1, 1e-6)
    rng = np.random.default_rng(8)
    rows = []
    for _ in range(30):
        x = rng.random(2)
        a = mo.arc_jacobian_det(cv, binning, 1, x)
        f = mo.arc_jacobian_det_fd(cv, binning, 1, x)
        rows.append((a, f))
    floor = 1e-3 * max(abs(a) for a, _ in rows)
    for a, f in rows:
        assert abs(a - f) <= 1e-4 * max(abs(a), floor)

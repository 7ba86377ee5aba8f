"""Nodal censuses on analytic fields with known counts and lengths."""

import math

import numpy as np
import pytest

from nodalab import eigenfunctions as eig
from nodalab import lattice as lat
from nodalab import nodal
from nodalab.errors import DegenerateSamplingError, PreconditionError
from nodalab.fields import TORUS, TrigField, constant_field, square

# Frozen from the equal-coefficient corpus (max observed count/E was 0.62).
COURANT_CAP = 1.0


def cos_field(m=1):
    return TrigField([[m, 0], [-m, 0]], [0.5, 0.5], domain=TORUS)


def checkerboard_field():
    return TrigField([[1, 1], [1, -1], [-1, 1], [-1, -1]], [0.25] * 4, domain=TORUS)


def sum_cos_field():
    return eig.toral_field(eig.build_coefficients(lat.lattice_points(1), "equal"))


def test_strip_count():
    c = nodal.count_nodal_domains(cos_field(), TORUS, 64)
    assert c.count_total == 2 and c.status == "stable"


def test_checkerboard_count():
    c = nodal.count_nodal_domains(checkerboard_field(), TORUS, 64)
    assert c.count_total == 4


def test_sum_cos_count():
    c = nodal.count_nodal_domains(sum_cos_field(), TORUS, 256)
    assert c.count_total == 2


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_strips_scale_with_frequency(m):
    c = nodal.count_nodal_domains(cos_field(m), TORUS, 64)
    assert c.count_total == 2 * m


def test_signs_never_merge():
    c = nodal.count_nodal_domains(checkerboard_field(), TORUS, 64)
    signs = [comp.sign for comp in c.components]
    assert sorted(signs) == [-1, -1, 1, 1]
    assert sum(comp.sign > 0 for comp in c.components) + sum(
        comp.sign < 0 for comp in c.components
    ) == c.count_total


def test_torus_seam_consistency():
    # Diagonal strips cross both seams; miscounting the wrap would inflate the count.
    diag = TrigField([[1, 1], [-1, -1]], [0.5, 0.5], domain=TORUS)
    c = nodal.count_nodal_domains(diag, TORUS, 64)
    assert c.count_total == 2


def test_degenerate_sampling_guard():
    with pytest.raises(DegenerateSamplingError):
        nodal.count_nodal_domains(constant_field(0.0), TORUS, 64)


def test_resolution_precondition():
    with pytest.raises(PreconditionError):
        nodal.count_nodal_domains(cos_field(), TORUS, 32)


def test_interior_exclusion_on_square():
    # Strips truncated by a window touch its boundary and are excluded.
    f = TrigField([[1, 0], [-1, 0]], [0.5, 0.5], domain=square(2.0))
    c = nodal.count_nodal_domains(f, square(2.0), 64)
    assert c.count_interior == 0
    assert c.count_total > 0


def test_census_stability_protocol_reports_counts():
    c = nodal.count_nodal_domains(cos_field(), TORUS, 64)
    assert c.counts_checked == (2, 2)
    assert c.resolution == 128


# ---------------------------------------------------------------------------
# Localized box counts
# ---------------------------------------------------------------------------


def test_boxes_smaller_than_strips_contain_nothing():
    c = nodal.count_nodal_domains(cos_field(), TORUS, 64)
    assert nodal.box_count_mean_grid(c, 0.3, 8) == 0.0
    assert nodal.box_count_integral(c, 0.3) == 0.0


def test_box_overlap_identity_single_component():
    # With boxes larger than every component, the exact integral equals the sum
    # of (side - wx)(side - wy) over components, and the grid mean approaches it.
    c = nodal.count_nodal_domains(checkerboard_field(), TORUS, 64)
    side = 0.8
    exact = nodal.box_count_integral(c, side)
    per_comp = sum(
        (side - comp.span_x[1]) * (side - comp.span_y[1]) for comp in c.components
    )
    assert exact == pytest.approx(per_comp)
    grid = nodal.box_count_mean_grid(c, side, 64)
    assert grid == pytest.approx(exact, abs=0.05)


def test_localized_report_scales():
    cv = eig.build_coefficients(lat.lattice_points(25), "equal")
    rep = nodal.localized_count_integral(cv, 2.0, 16)
    assert rep.lhs == 12
    assert rep.error_scale == pytest.approx(12.5)
    assert rep.ratio < 2.0


def test_localized_precondition():
    cv = eig.build_coefficients(lat.lattice_points(25), "equal")
    with pytest.raises(PreconditionError):
        nodal.localized_count_integral(cv, 6.0, 8)


# ---------------------------------------------------------------------------
# Lengths
# ---------------------------------------------------------------------------


def test_length_strips():
    assert nodal.nodal_set_length(cos_field(), TORUS, 256) == pytest.approx(2.0, abs=1e-3)


def test_length_checkerboard():
    assert nodal.nodal_set_length(checkerboard_field(), TORUS, 256) == pytest.approx(
        4.0, abs=1e-2
    )


def test_length_zero_free():
    assert nodal.nodal_set_length(constant_field(1.0), TORUS, 64) == 0.0


def test_length_tracks_wavenumber():
    # Length per sqrt(E) stays bounded across energies.
    ratios = []
    for e in (25, 65, 325):
        cv = eig.build_coefficients(lat.lattice_points(e), "equal")
        ln = nodal.nodal_set_length(eig.toral_field(cv), TORUS, max(256, 16 * int(math.sqrt(e)) + 1))
        ratios.append(ln / math.sqrt(e))
    assert max(ratios) < 4.0
    assert max(ratios) / min(ratios) < 1.5


def test_courant_regression_cap():
    for e in (25, 65, 325):
        cv = eig.build_coefficients(lat.lattice_points(e), "equal")
        c = nodal.count_nodal_domains(eig.toral_field(cv), TORUS)
        assert c.count_total <= COURANT_CAP * e


def test_refinement_stays_put_on_analytic_fields():
    for field, expected in ((cos_field(), 2), (checkerboard_field(), 4)):
        for res in (64, 128, 256):
            c = nodal.census(field, TORUS, res)
            assert c.count_total == expected

from fractions import Fraction

import numpy as np
import pytest

from src.core.certifier import algebraic_spectrum, certify
from src.core.elliptic import EllipticElement, MatEllipticOp, agm_complete_K
from src.core.models import (LameParams, SexticParams, build_goldstone, build_lame, build_sextic, build_sextic_gauged,
                             goldstone_space, select_space)
from src.core.polyalg import LaurentPoly, PolyMat2
from src.simulation.numverify import GridSpec, auto_line_length, match_spectra, solve_line, solve_periodic


def _sextic_values(params):
    _, space = build_sextic(params)
    return algebraic_spectrum(certify(build_sextic_gauged(params), space)).real_values()


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(63)
    with pytest.raises(ValueError):
        GridSpec(128, "torus")
    with pytest.raises(ValueError):
        GridSpec(128, "line", -1.0)
    points, h = GridSpec(99, "line").line_points(1.0)
    assert len(points) == 99
    assert h == pytest.approx(0.02)
    assert points[0] == pytest.approx(-0.98)


def test_auto_line_length(sextic_standard):
    L = auto_line_length(sextic_standard)
    assert 0.5 * L ** 4 == pytest.approx(40.0, rel=1e-6)


def test_harmonic_blocks_on_the_line():
    y2 = LaurentPoly.monomial("y", 2)
    potential = PolyMat2.diag(y2, y2 + LaurentPoly.constant("y", 2))
    values = solve_line(potential, GridSpec(1500, "line", 8.0), 6)
    np.testing.assert_allclose(values, [1, 3, 3, 5, 5, 7], atol=1e-3)


def test_bare_potential_needs_box():
    with pytest.raises(ValueError):
        solve_line(PolyMat2.identity("y"), GridSpec(128), 4)


def test_periodic_free_particle():
    zero = EllipticElement.zero(0)
    op = MatEllipticOp(zero, zero, zero, zero)
    values = solve_periodic(op, GridSpec(256, "periodic"), 6)
    np.testing.assert_allclose(values, [0, 0, 1, 1, 1, 1], atol=1e-3)


def test_sextic_numeric_levels_confirm_algebraic(sextic_standard):
    algebraic = _sextic_values(sextic_standard)
    numeric = solve_line(sextic_standard, GridSpec(2000), 40)
    report = match_spectra(algebraic, numeric, 1e-3, model="sextic", space="sextic")
    assert report.all_confirmed
    assert report.worst_error < 5e-4
    assert len(report.records()) == 4


def test_line_discretization_error_is_second_order():
    params = SexticParams(p1=0, p2=1, kappa0=1, m=2)
    top = max(_sextic_values(params))
    coarse = solve_line(params, GridSpec(999), 12)
    fine = solve_line(params, GridSpec(1999), 12)
    err_coarse = np.min(np.abs(coarse - top))
    err_fine = np.min(np.abs(fine - top))
    assert err_coarse / err_fine >= 3.0


def test_lame_numeric_levels_confirm_algebraic(lame_case1):
    op, spaces = build_lame(lame_case1)
    algebraic = algebraic_spectrum(certify(op, select_space(spaces, "V1"))).real_values()
    numeric = solve_periodic(lame_case1, GridSpec(4096, "periodic"), 12)
    report = match_spectra(algebraic, numeric, 1e-3, model="lame", space="V1")
    assert report.all_confirmed


def _nearest_errors(algebraic, numeric):
    return np.array([np.min(np.abs(numeric - value)) for value in algebraic])


def test_periodic_free_particle_degeneracy():
    zero = EllipticElement.zero(Fraction(1, 2))
    op = MatEllipticOp(zero, zero, zero, zero)
    values = solve_periodic(op, GridSpec(1024, "periodic"), 10)
    period = 4.0 * agm_complete_K(0.5)
    np.testing.assert_allclose(values[:2], 0.0, atol=1e-9)
    for j, group in ((1, values[2:6]), (2, values[6:10])):
        assert np.ptp(group) < 1e-9
        np.testing.assert_allclose(group, (2 * np.pi * j / period) ** 2, rtol=1e-4)


def test_line_levels_do_not_depend_on_box(sextic_standard):
    algebraic = _sextic_values(sextic_standard)
    L = auto_line_length(sextic_standard)
    # same step h = 2L / 2000 in both boxes
    inner = solve_line(sextic_standard, GridSpec(1999, "line", L), 12)
    outer = solve_line(sextic_standard, GridSpec(2399, "line", 1.2 * L), 12)
    for value in algebraic:
        a = inner[np.argmin(np.abs(inner - value))]
        b = outer[np.argmin(np.abs(outer - value))]
        assert abs(a - b) < 1e-8


@pytest.mark.parametrize("space", ["V1", "V3"])
@pytest.mark.parametrize("m", [0, 1])
def test_lame_numeric_levels_confirm_algebraic_spaces(m, space):
    params = LameParams(case=1, m=m, delta=1, ksq=Fraction(1, 2), space=space)
    op, spaces = build_lame(params)
    cert = certify(op, select_space(spaces, space))
    algebraic = algebraic_spectrum(cert).real_values()
    assert algebraic
    numeric = solve_periodic(params, GridSpec(4096, "periodic"), max(40, 4 * cert.dimension))
    report = match_spectra(algebraic, numeric, 1e-3, model="lame", space=space)
    assert report.all_confirmed


def test_periodic_discretization_error_is_second_order(lame_case1):
    op, spaces = build_lame(lame_case1)
    algebraic = algebraic_spectrum(certify(op, select_space(spaces, "V1"))).real_values()
    coarse = _nearest_errors(algebraic, solve_periodic(lame_case1, GridSpec(1024, "periodic"), 12))
    fine = _nearest_errors(algebraic, solve_periodic(lame_case1, GridSpec(2048, "periodic"), 12))
    assert coarse.max() / fine.max() >= 3.0


def test_goldstone_levels_converge(goldstone):
    op = build_goldstone(goldstone.coupling)
    algebraic = algebraic_spectrum(certify(op, goldstone_space(goldstone.coupling))).real_values()
    np.testing.assert_allclose(algebraic, [1.0, 5.0], atol=1e-12)
    coarse = _nearest_errors(algebraic, solve_periodic(op, GridSpec(512, "periodic"), 12))
    fine = _nearest_errors(algebraic, solve_periodic(op, GridSpec(1024, "periodic"), 12))
    assert fine.max() < 1e-4
    assert fine.max() <= coarse.max()


def test_match_spectra_rows():
    report = match_spectra([1.0, 3.0, 1 + 1j], [1.0004, 3.2, 7.0], 1e-3)
    first, second, third = report.rows
    assert first.confirmed and first.numeric == 1.0004
    assert not second.confirmed and second.rel_err == pytest.approx(0.05)
    assert third.complex_value and third.numeric is None
    assert not report.all_confirmed
    assert report.to_dict()["confirmed"] == 1


def test_match_spectra_is_injective():
    report = match_spectra([1.0, 1.001], [1.0005, 5.0], 1e-3)
    assert report.rows[1].numeric == 1.0005
    assert report.rows[0].numeric == 5.0
    assert "ambiguous" in report.rows[0].note
    short = match_spectra([1.0, 2.0], [1.0], 1e-3)
    assert short.rows[1].numeric is None
    assert short.rows[1].note == "no numeric value left"
    with pytest.raises(ValueError):
        match_spectra([1.0], [1.0], 0.0)

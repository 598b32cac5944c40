from fractions import Fraction

import numpy as np
import pytest

from src.core.certifier import (Certificate, Counterexample, algebraic_spectrum, block_charpolys,
                                charpoly_exact, charpoly_multiply, certify, eigenvectors,
                                reconstruct_eigenfunction, square_free_factors)
from src.core.errors import ModelError, TrackMismatchError
from src.core.exactfield import make_quad
from src.core.models import (LameParams, SexticParams, build_goldstone, build_lame, build_sextic,
                             build_sextic_gauged, build_sextic_pushed, goldstone_space, select_space,
                             sextic_coefficient_keys, sextic_potential)
from src.core.polyalg import LaurentPoly


def _sextic_certificate(params):
    _, space = build_sextic(params)
    return certify(build_sextic_gauged(params), space)


def _second_derivative(f, points, h=1e-3):
    """Fourth-order central difference along the leading axis"""
    return (-f(points + 2 * h) + 16 * f(points + h) - 30 * f(points)
            + 16 * f(points - h) - f(points - 2 * h)) / (12 * h * h)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("eps", [0, 1])
@pytest.mark.parametrize("p1,p2,kappa0", [(0, 1, 1), (Fraction(1, 2), 1, 3), (-1, 2, Fraction(-1, 2))])
def test_sextic_certifies_with_dimension_2m(m, eps, p1, p2, kappa0):
    cert = _sextic_certificate(SexticParams(p1=p1, p2=p2, kappa0=kappa0, m=m, eps=eps))
    assert isinstance(cert, Certificate)
    assert cert.dimension == 2 * m
    assert cert.recheck_passed
    assert not cert.realized_mixer


def test_sextic_characteristic_polynomial(sextic_standard):
    cert = _sextic_certificate(sextic_standard)
    assert cert.charpoly() == [1, 0, -640, 0, 81920]
    spectrum = algebraic_spectrum(cert)
    assert spectrum.converged
    assert not spectrum.has_complex()
    values = spectrum.real_values()
    assert len(values) == 4
    np.testing.assert_allclose(values, [-21.52, -13.30, 13.30, 21.52], atol=0.01)
    np.testing.assert_allclose(values, -np.array(values[::-1]), atol=1e-12)


@pytest.mark.parametrize("name", ["kappa1", "kappa2", "kappa3"])
def test_sextic_wrong_mixer_is_rejected(sextic_standard, name):
    params = sextic_standard.replace(m=3, **{name: Fraction(1, 2)})
    result = _sextic_certificate(params)
    assert isinstance(result, Counterexample)
    assert "basis #" in result.locator
    assert result.to_dict()["status"] == "counterexample"


SENSITIVE_SEXTIC = SexticParams(p1=Fraction(1, 2), p2=1, kappa0=1, m=3)


@pytest.mark.parametrize("key", sextic_coefficient_keys(SENSITIVE_SEXTIC))
def test_sextic_coefficient_perturbation_is_rejected(key):
    assert isinstance(_sextic_certificate(SENSITIVE_SEXTIC), Certificate)
    result = _sextic_certificate(SENSITIVE_SEXTIC.replace(perturb={key: Fraction(1, 1000)}))
    assert isinstance(result, Counterexample), key
    assert "basis #" in result.locator
    assert result.residual_text()


@pytest.mark.parametrize("offset", [1, 3])
def test_sextic_wrong_degrees_are_rejected(offset):
    m = 4
    params = SexticParams(p1=0, p2=1, kappa0=1, m=m, degrees=(m - offset, m))
    assert isinstance(_sextic_certificate(params), Counterexample)


def test_empty_space_is_an_error():
    with pytest.raises(ModelError):
        _sextic_certificate(SexticParams(p1=0, p2=1, kappa0=1, m=2, degrees=(-2, 0)))


def test_realized_mixer_gives_same_matrix():
    params = SexticParams(p1=Fraction(1, 3), p2=1, kappa0=2, m=3)
    conjugated = _sextic_certificate(params)
    _, space = build_sextic(params)
    realized = certify(build_sextic_pushed(params), space, realized=True)
    assert isinstance(realized, Certificate)
    assert realized.realized_mixer
    assert realized.recheck_passed
    assert realized.matrix == conjugated.matrix
    assert realized.charpoly() == conjugated.charpoly()


def test_decoupled_sextic_factors(sextic_standard):
    cert = _sextic_certificate(sextic_standard.replace(kappa0=0, m=3))
    blocks = block_charpolys(cert)
    assert blocks is not None
    assert charpoly_multiply(*blocks) == cert.charpoly()
    assert block_charpolys(_sextic_certificate(sextic_standard)) is None


LAME_GRID = [(case, m) for case, ms in ((1, range(0, 5)), (2, range(1, 5))) for m in ms]


@pytest.mark.parametrize("ksq", [Fraction(1, 2), Fraction(1, 3), Fraction(9, 16)])
@pytest.mark.parametrize("delta", [0, 1, 2])
@pytest.mark.parametrize("case,m", LAME_GRID)
def test_lame_spaces_certify(case, m, delta, ksq):
    params = LameParams(case=case, m=m, delta=delta, ksq=ksq)
    op, spaces = build_lame(params)
    assert spaces
    for space in spaces:
        cert = certify(op, space)
        assert isinstance(cert, Certificate), space.name
        n_deg, m_deg = space.degrees
        assert cert.dimension == n_deg + m_deg + 2
        assert cert.recheck_passed

        for key in ("kappa", "A", "theta_k", "delta_shift"):
            shifted_op, shifted = build_lame(params.replace(perturb={key: Fraction(1, 1000)}))
            result = certify(shifted_op, select_space(shifted, space.name))
            assert isinstance(result, Counterexample), (space.name, key)


def test_lame_case1_spectrum(lame_case1):
    op, spaces = build_lame(lame_case1)
    cert = certify(op, select_space(spaces, "V1"))
    assert cert.matrix == [[Fraction(3, 4), 1], [2, Fraction(3, 4)]]
    assert cert.charpoly() == [1, Fraction(-3, 2), Fraction(-23, 16)]
    values = algebraic_spectrum(cert).real_values()
    np.testing.assert_allclose(values, [0.75 - np.sqrt(2), 0.75 + np.sqrt(2)], rtol=1e-14)


@pytest.mark.parametrize("key", ["kappa", "A", "theta_k"])
def test_lame_perturbation_is_rejected(key):
    params = LameParams(case=1, m=1, delta=1, ksq=Fraction(1, 3), perturb={key: Fraction(1, 1000)})
    op, spaces = build_lame(params)
    result = certify(op, select_space(spaces, "V1"))
    assert isinstance(result, Counterexample)
    assert result.residual_text()


def test_lame_decoupled_blocks():
    params = LameParams(case=1, m=1, delta=7, ksq=Fraction(1, 2))
    op, spaces = build_lame(params)
    cert = certify(op, select_space(spaces, "V1"))
    blocks = block_charpolys(cert)
    assert blocks is not None
    assert charpoly_multiply(*blocks) == cert.charpoly()


def test_goldstone_spectrum(goldstone):
    op = build_goldstone(goldstone.coupling)
    cert = certify(op, goldstone_space(goldstone.coupling))
    assert cert.dimension == 2
    np.testing.assert_allclose(algebraic_spectrum(cert).real_values(), [1.0, 5.0], atol=1e-12)


def test_track_mismatch(sextic_standard):
    _, sextic_space = build_sextic(sextic_standard)
    with pytest.raises(TrackMismatchError):
        certify(build_goldstone(4), sextic_space)
    with pytest.raises(TrackMismatchError):
        certify(build_sextic_gauged(sextic_standard), goldstone_space(4))


def test_charpoly_examples():
    assert charpoly_exact([[2, 0], [0, 5]]) == [1, -7, 10]
    root2 = make_quad(0, 1, 2)
    assert charpoly_exact([[0, root2], [root2, 0]]) == [1, 0, -2]
    assert charpoly_exact([[1, 2, 0], [0, 1, 0], [0, 0, 3]]) == [1, -5, 7, -3]


def test_square_free_factors():
    p = LaurentPoly("lam", {3: 1, 2: -4, 1: 5, 0: -2})
    factors = {mult: factor for factor, mult in square_free_factors(p)}
    assert factors == {1: LaurentPoly("lam", {1: 1, 0: -2}), 2: LaurentPoly("lam", {1: 1, 0: -1})}


def test_algebraic_spectrum_cases():
    spectrum = algebraic_spectrum([[2, 0], [0, 5]])
    assert spectrum.real_values() == pytest.approx([2.0, 5.0], abs=1e-14)
    double = algebraic_spectrum([[3, 0], [0, 3]])
    assert len(double.eigenvalues) == 1
    assert double.eigenvalues[0].multiplicity == 2
    assert double.values() == pytest.approx([3.0, 3.0])
    rotation = algebraic_spectrum([[0, -1], [1, 0]])
    assert rotation.has_complex()
    assert rotation.real_values() == []
    assert sorted(v.imag for v in rotation.values()) == pytest.approx([-1.0, 1.0], abs=1e-14)


def test_sextic_eigenfunction_solves_line_equation(sextic_standard):
    cert = _sextic_certificate(sextic_standard)
    _, space = build_sextic(sextic_standard)
    potential = sextic_potential(sextic_standard)
    y = np.linspace(-1.5, 1.5, 31)
    v11, v12, v21, v22 = (entry.evaluate(y) for entry in potential.entries())
    for energy in algebraic_spectrum(cert).real_values():
        psi = reconstruct_eigenfunction(eigenvectors(cert, energy)[0], space)
        values = psi(y)
        h_psi = -_second_derivative(psi, y)
        h_psi[:, 0] += v11 * values[:, 0] + v12 * values[:, 1]
        h_psi[:, 1] += v21 * values[:, 0] + v22 * values[:, 1]
        residual = np.abs(h_psi - energy * values).max() / np.abs(values).max()
        assert residual < 1e-5


def test_lame_eigenfunction_solves_periodic_equation(lame_case1):
    op, spaces = build_lame(lame_case1)
    space = select_space(spaces, "V1")
    cert = certify(op, space)
    z = np.linspace(0.0, 6.0, 25)
    v11, v12, _, v22 = op.potential_at(z)
    for energy in algebraic_spectrum(cert).real_values():
        psi = reconstruct_eigenfunction(eigenvectors(cert, energy)[0], space)
        values = psi(z)
        h_psi = -_second_derivative(psi, z)
        h_psi[:, 0] += v11 * values[:, 0] + v12 * values[:, 1]
        h_psi[:, 1] += v12 * values[:, 0] + v22 * values[:, 1]
        assert np.abs(h_psi - energy * values).max() < 1e-5 * np.abs(values).max()

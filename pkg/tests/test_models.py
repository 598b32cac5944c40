import logging
from fractions import Fraction

import numpy as np
import pytest

from src.core.errors import ModelError
from src.core.elliptic import EllipticElement
from src.core.exactfield import QuadExt, make_quad, normalize
from src.core.models import (LAME_CATALOG, LAME_SPACES, CalogeroParams, GeneralizedLameAnsatz, LameParams,
                             SexticParams, admissibility_check, ansatz_polynomial_probe, build_calogero_reduced,
                             build_goldstone, build_lame, build_sextic, build_sextic_gauged, calogero_ground_state,
                             calogero_potential, calogero_tau, catalog_entries, goldstone_space,
                             lame_field_analysis, model_from_dict, sextic_coefficient_keys, sextic_potential)
from src.core.polyalg import LaurentPoly


def _y(coeffs):
    return LaurentPoly("y", {e: Fraction(c) for e, c in coeffs.items()})


def test_sextic_potential_example(sextic_standard):
    M = sextic_potential(sextic_standard)
    assert M.e11 == _y({6: 4, 2: -6})
    assert M.e22 == _y({6: 4, 2: -22})
    assert M.e12 == _y({0: -16})
    assert M.e21 == M.e12


def test_sextic_supplementary_term():
    M = sextic_potential(SexticParams(p1=0, p2=1, kappa0=1, m=2, eps=Fraction(1, 2)))
    assert M.e11.coeff(-2) == Fraction(-1, 4)
    assert M.e22.coeff(-2) == Fraction(-1, 4)
    assert sextic_potential(SexticParams(p1=0, p2=1, kappa0=1, m=2, eps=1)).e11.coeff(-2) == 0


def test_sextic_decouples_without_kappa0():
    op, space = build_sextic(SexticParams(p1=0, p2=1, kappa0=0, m=3))
    assert op.is_block_diagonal()
    assert space.mixer.is_identity()
    assert space.degrees == (1, 3)
    assert space.dimension == 6


@pytest.mark.parametrize("eps", [0, 1, Fraction(1, 2)])
def test_sextic_gauged_operator_is_polynomial(eps):
    op = build_sextic_gauged(SexticParams(p1=Fraction(1, 2), p2=1, kappa0=3, m=3, eps=eps))
    assert op.laurent_tail() == []
    assert op.var == "x"
    assert op.order == 2


def test_sextic_eps_enters_through_one_minus_two_eps():
    """With p1 = 0 the gauge exponent only reaches the first-order coefficient"""
    base = SexticParams(p1=0, p2=1, kappa0=1, m=2)
    op0 = build_sextic_gauged(base)
    op1 = build_sextic_gauged(base.replace(eps=1))
    assert op0.e12 == op1.e12 and op0.e21 == op1.e21
    assert op0.e11.coefficient(2) == op1.e11.coefficient(2)
    assert op0.e11.coefficient(1) != op1.e11.coefficient(1)


def test_sextic_coefficient_keys(sextic_standard):
    assert sextic_coefficient_keys(sextic_standard) == ["s0:y^6", "s0:y^2", "s1:y^0", "s3:y^2"]
    assert len(sextic_coefficient_keys(sextic_standard.replace(p1=1))) == 6


def test_sextic_perturbation_shifts_one_coefficient(sextic_standard):
    shift = Fraction(1, 1000)
    M = sextic_potential(sextic_standard.replace(perturb={"s1:y^0": shift}))
    assert M.e12 == _y({0: -16}) + _y({0: shift})
    assert M.e21 == M.e12
    assert M.e11 == _y({6: 4, 2: -6})

    M = sextic_potential(sextic_standard.replace(perturb={"s3:y^0": shift}))
    assert M.e11.coeff(0) == shift
    assert M.e22.coeff(0) == -shift

    params = model_from_dict({**sextic_standard.to_dict(), "perturb": {"s0:y^6": "1/1000"}})
    assert params.perturb == {"s0:y^6": shift}
    assert params.to_dict()["perturb"] == {"s0:y^6": "1/1000"}


@pytest.mark.parametrize("key", ["s2:y^0", "s0:x^2", "s0:y^two"])
def test_sextic_perturbation_key_validation(sextic_standard, key):
    with pytest.raises(ModelError):
        sextic_standard.replace(perturb={key: 1})


def test_sextic_validation(caplog):
    with pytest.raises(ModelError):
        SexticParams(p1=0, p2=1, kappa0=1, m=1)
    with pytest.raises(ModelError):
        SexticParams(p1=0, p2=1, kappa0=1, m=Fraction(5, 2))
    with caplog.at_level(logging.WARNING):
        build_sextic(SexticParams(p1=0, p2=-1, kappa0=1, m=2))
    assert any("not normalizable" in r.message for r in caplog.records)


def test_lame_case1_example(lame_case1):
    assert lame_case1.A == 2
    assert lame_case1.C == 4
    assert lame_case1.two_theta_k_sq == 4
    assert lame_case1.R == Fraction(1, 2)
    plan = lame_field_analysis(lame_case1)
    assert plan.rational
    assert plan.two_theta_k == 2
    assert plan.kappa["V1"] == Fraction(1, 2)


def test_lame_case2_example():
    params = LameParams(case=2, m=1, delta=1, ksq=Fraction(1, 2))
    assert params.space == "V5"
    assert params.A == 6
    assert params.C == 8
    assert params.R == Fraction(2, 3)
    assert params.kappa_sq(LAME_SPACES["V5"]) == Fraction(1, 3)
    plan = lame_field_analysis(params)
    kappa = plan.kappa["V5"]
    assert normalize(kappa * kappa) == Fraction(1, 3)


def test_lame_field_plan_with_radicand():
    params = LameParams(case=1, m=0, delta=1, ksq=Fraction(1, 3), space="V1")
    plan = lame_field_analysis(params)
    assert not plan.rational
    assert plan.radicand == Fraction(1, 6)
    assert isinstance(plan.two_theta_k, QuadExt)
    assert normalize(plan.two_theta_k * plan.two_theta_k) == params.two_theta_k_sq
    assert plan.kappa["V1"] == make_quad(0, 1, Fraction(1, 6))
    for name in ("V1", "V2", "V3", "V4"):
        kappa = plan.kappa[name]
        assert normalize(kappa * kappa) == params.kappa_sq(LAME_SPACES[name])


def test_lame_field_plan_at_delta_zero():
    assert lame_field_analysis(LameParams(case=1, m=0, delta=0, ksq=Fraction(1, 4))).rational
    assert not lame_field_analysis(LameParams(case=1, m=0, delta=0, ksq=Fraction(1, 2))).rational


@pytest.mark.parametrize("case,m", [(1, 0), (1, 2), (2, 1), (2, 3)])
def test_lame_parameter_invariants(case, m):
    ksq = Fraction(1, 3)
    for delta in (0, 1, 2):
        params = LameParams(case=case, m=m, delta=delta, ksq=ksq)
        assert params.C - params.A == 2 * delta
        assert params.two_theta_sq + params.delta ** 2 == params.sigma ** 2
        names = [spec.name for spec in LAME_CATALOG if spec.case == case]
        k1, k2, k3, k4 = (params.kappa_sq(LAME_SPACES[n]) for n in names)
        if case == 1:
            assert k1 * k2 == ksq * ksq and k3 * k4 == params.R ** 2
        else:
            assert k1 * k2 == params.R ** 2 and k3 * k4 == ksq * ksq


def test_lame_validation():
    with pytest.raises(ModelError):
        LameParams(case=3, m=0, delta=0, ksq=Fraction(1, 2))
    with pytest.raises(ModelError):
        LameParams(case=1, m=0, delta=4, ksq=Fraction(1, 2))
    with pytest.raises(ModelError):
        LameParams(case=1, m=0, delta=0, ksq=1)
    with pytest.raises(ModelError):
        LameParams(case=1, m=0, delta=0, ksq=Fraction(1, 2), space="V5")
    with pytest.raises(ModelError):
        LameParams(case=1, m=0, delta=0, ksq=Fraction(1, 2), perturb={"B": 1})


def test_lame_spaces_and_dimensions():
    op, spaces = build_lame(LameParams(case=1, m=2, delta=1, ksq=Fraction(1, 2)))
    dims = {space.name: space.dimension for space in spaces}
    assert dims == {"V1": 6, "V2": 6, "V3": 5, "V4": 5}
    assert op.e12 == op.e21
    _, spaces = build_lame(LameParams(case=2, m=0, delta=0, ksq=Fraction(1, 2)))
    assert sorted(space.name for space in spaces) == ["V5", "V6"]


def test_lame_decoupled_keeps_compatible_spaces(caplog):
    params = LameParams(case=1, m=0, delta=3, ksq=Fraction(1, 2))
    assert params.decoupled
    with caplog.at_level(logging.WARNING):
        op, spaces = build_lame(params)
    assert op.is_block_diagonal()
    assert sorted(space.name for space in spaces) == ["V1", "V3", "V4"]
    assert any("decouples" in r.message for r in caplog.records)


def test_admissibility_examples():
    lame_like = GeneralizedLameAnsatz(LaurentPoly.monomial("x", 1), LaurentPoly.monomial("x", 1), Fraction(1),
                                      (0, 1, 1), (0, 0, 0), (0, 1, 1))
    ok, problems = admissibility_check(lame_like)
    assert ok and problems == []
    odd = GeneralizedLameAnsatz(LaurentPoly.zero("x"), LaurentPoly.zero("x"), Fraction(1),
                                (1, 0, 0), (0, 0, 0), (0, 0, 0))
    ok, problems = admissibility_check(odd)
    assert not ok
    assert any("alpha[1]" in p for p in problems)
    shifted = GeneralizedLameAnsatz(LaurentPoly.zero("x"), LaurentPoly.zero("x"), Fraction(1),
                                    (2, 0, 0), (1, 0, 0), (0, 0, 0))
    assert not admissibility_check(shifted)[0]


def test_ansatz_probe_agrees_with_admissibility():
    x = LaurentPoly.monomial("x", 1)
    good = GeneralizedLameAnsatz(x * 2, x * 4, Fraction(3), (0, 1, 1), (0, 0, 0), (0, 1, 1))
    bad = GeneralizedLameAnsatz(x, x, Fraction(1), (1, 0, 0), (0, 0, 0), (0, 0, 0))
    assert ansatz_polynomial_probe(good, Fraction(1, 2))
    assert not ansatz_polynomial_probe(bad, Fraction(1, 2))


def test_goldstone_operator():
    op = build_goldstone(4)
    assert op.ksq == 0
    trace = op.e11 + op.e22
    assert trace == EllipticElement.constant(0, 4)
    assert build_goldstone(0).e12.is_zero()
    space = goldstone_space(4)
    assert space.dimension == 2
    assert space.mixer.is_identity()


def test_calogero_constants():
    params = CalogeroParams(N=3, nu=2, p1=0, p2=Fraction(1, 4), eps=0, m=2, kappa0=1)
    assert params.b == 7
    assert params.gamma == 0
    assert params.ground_energy == Fraction(15, 2)
    V = calogero_potential(params)
    assert V.e11.laurent_tail().is_zero()
    op, space = build_calogero_reduced(params)
    assert space.degrees == (0, 2)
    assert space.var == "tau"
    with_eps = params.replace(eps=1)
    assert with_eps.gamma == 2 * (1 - 1 + 7)
    assert calogero_potential(with_eps).e11.coeff(-1) == 14


def test_calogero_coordinates():
    points = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 3.0]])
    np.testing.assert_allclose(calogero_tau(points), [-1.0, -3.0])
    np.testing.assert_allclose(calogero_tau(points + 5.0), calogero_tau(points))
    psi0 = calogero_ground_state(np.array([1.0, 2.0, 3.0]), 2)
    assert psi0 == pytest.approx(1.0 * 4.0 * 1.0 * np.exp(-7.0))
    with pytest.raises(ModelError):
        CalogeroParams(N=1, nu=0, p1=0, p2=0, eps=0, m=2, kappa0=0)


def test_model_from_dict():
    params = model_from_dict({"model": "sextic", "p1": "0", "p2": "1", "kappa0": "1", "m": 2, "eps": "0"})
    assert isinstance(params, SexticParams)
    lame = model_from_dict({"model": "lame", "case": 1, "m": 0, "delta": "1", "ksq": "1/2", "space": "V1"})
    assert lame.ksq == Fraction(1, 2)
    assert model_from_dict({"model": "goldstone", "coupling": "4"}).coupling == 4
    for bad in ({"model": "sextic", "p2": 1}, {"model": "nope"}, {"p2": 1},
                {"model": "lame", "case": 1, "m": 0, "delta": "x", "ksq": "1/2"}):
        with pytest.raises(ModelError):
            model_from_dict(bad)


def test_catalog_entries():
    rows = catalog_entries(0)
    assert [row["name"] for row in rows] == [f"V{i}" for i in range(1, 9)]
    by_name = {row["name"]: row for row in rows}
    assert by_name["V4"]["kappa_sq"] == "R1/k^2"
    assert by_name["V8"]["kappa_sq"] == "k^2/R2"
    assert by_name["V1"]["dimension_at_m"] == 2
    assert by_name["V3"]["dimension_at_m"] == 1
    assert by_name["V7"]["dimension_at_m"] is None
    assert "dimension_at_m" not in catalog_entries()[0]

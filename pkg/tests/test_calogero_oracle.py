from fractions import Fraction

import numpy as np
import pytest

from src.core.certifier import ClosedFormFunction
from src.core.errors import SampleRejectedError
from src.core.models import CalogeroParams, calogero_ground_state
from src.simulation.calogero_oracle import (calogero_report, calogero_residual, check_reading,
                                            pairwise_min_separation, sample_points)


@pytest.fixture
def harmonic():
    """nu = 0 and no deformation: V* reduces to diag(1, -1)"""
    return CalogeroParams(N=3, nu=0, p1=0, p2=0, eps=0, m=0, kappa0=0)


@pytest.fixture
def interacting():
    return CalogeroParams(N=3, nu=2, p1=0, p2=Fraction(1, 4), eps=0, m=2, kappa0=1)


def _top_ground_state(nu):
    def evaluate(points):
        psi0 = calogero_ground_state(points, nu)
        return np.stack([psi0, np.zeros_like(psi0)], axis=-1)

    return ClosedFormFunction({"top": "psi0"}, evaluate)


def test_pairwise_separation():
    points = np.array([[0.0, 1.0, 3.0], [0.0, 0.5, -0.25]])
    np.testing.assert_allclose(pairwise_min_separation(points), [1.0, 0.25])


def test_pairwise_separation_accepts_lists():
    assert pairwise_min_separation([[0, 1, 3]]).tolist() == [1.0]
    assert np.isfinite(pairwise_min_separation(np.zeros((1, 2)))).all()


def test_sample_points_respect_separation(rng):
    points = sample_points(4, 50, rng, min_separation=0.2)
    assert points.shape == (50, 4)
    assert pairwise_min_separation(points).min() >= 0.2


def test_harmonic_ground_state_residual(harmonic):
    report = calogero_residual(harmonic, 2.5, _top_ground_state(0), samples=30, seed=3)
    assert report.max_residual < 1e-8
    assert report.samples == 30
    assert report.to_dict()["energy"] == 2.5


def test_wrong_energy_is_visible(harmonic):
    report = calogero_residual(harmonic, 2.6, _top_ground_state(0), samples=30, seed=3)
    assert report.max_residual > 1e-2


def test_explicit_points_near_coincidence_are_rejected(harmonic):
    with pytest.raises(SampleRejectedError):
        calogero_residual(harmonic, 2.5, _top_ground_state(0), points=np.array([[0.0, 0.05, 1.0]]))


@pytest.mark.parametrize("reading", ["printed", "quartic"])
def test_readings_without_quadratic_gauge_fail_to_certify(interacting, reading):
    outcome = check_reading(interacting, reading, samples=10)
    assert not outcome.certified
    assert not outcome.succeeded
    assert outcome.locator
    assert outcome.to_dict()["residuals"] == []


@pytest.mark.slow
def test_quadratic_reading_reproduces_n_body_spectrum(interacting):
    outcome = check_reading(interacting, "quadratic", samples=20)
    assert outcome.certified
    assert outcome.dimension == 4
    assert outcome.residuals
    assert outcome.succeeded


def test_report_summary_without_success(interacting):
    report = calogero_report(interacting, samples=10, readings=("printed", "quartic"))
    assert report.succeeded_readings == []
    assert report.summary() == "no reading reproduced the N-body spectrum"
    assert [r["reading"] for r in report.to_dict()["readings"]] == ["printed", "quartic"]


@pytest.mark.slow
def test_quadratic_reading_at_m3():
    params = CalogeroParams(N=3, nu=2, p1=0, p2=Fraction(1, 4), eps=0, m=3, kappa0=1)
    outcome = check_reading(params, "quadratic", samples=20)
    assert outcome.certified
    assert outcome.dimension == 6
    assert outcome.succeeded
    assert max(r.max_residual for r in outcome.residuals) < 1e-5

"""Pointwise N-body residual check for the Calogero family.

The certified eigenpairs of the reduced operator are lifted back to functions of
x_1..x_N and the full Hamiltonian

    H = 1/2 sum_j (-d^2/dx_j^2 + x_j^2) + sum_{i<j} nu(nu-1)/(x_i - x_j)^2 + V*(tau)

is applied by fourth-order central differences.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from src.core.certifier import (Certificate, ClosedFormFunction, algebraic_spectrum, certify,
                                eigenvectors, reconstruct_eigenfunction)
from src.core.diffop import GaugeFactor
from src.core.errors import SampleRejectedError, StepSizeError
from src.core.models import CALOGERO_READINGS, CalogeroParams, build_calogero, calogero_potential, calogero_tau
from src.core.polyalg import LaurentPoly

logger = logging.getLogger(__name__)

MAX_DRAW_ROUNDS = 1000


def pairwise_min_separation(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    diffs = np.abs(points[..., :, None] - points[..., None, :])
    n = points.shape[-1]
    diffs = np.where(np.eye(n, dtype=bool), np.inf, diffs)
    return diffs.min(axis=(-2, -1))


def sample_points(N: int, samples: int, rng: np.random.Generator, min_separation: float = 0.2) -> np.ndarray:
    """Gaussian samples kept away from the coincidence planes x_i = x_j"""
    kept = []
    for _ in range(MAX_DRAW_ROUNDS):
        draw = rng.normal(size=(samples, N))
        kept.extend(draw[pairwise_min_separation(draw) >= min_separation])
        if len(kept) >= samples:
            return np.array(kept[:samples])
    raise SampleRejectedError(f"Could not draw {samples} points with separation {min_separation}")


def _hamiltonian_action(psi: ClosedFormFunction, points: np.ndarray, nu: float, potential, steps: np.ndarray):
    """(H psi, psi) at each sample point; steps holds one FD step per sample"""
    S, N = points.shape
    offsets = np.array([-2, -1, 1, 2], dtype=float)
    shifted = np.repeat(points[:, None, None, :], 4, axis=2).repeat(N, axis=1)
    for j in range(N):
        shifted[:, j, :, j] += offsets[None, :] * steps[:, None]
    values = psi(shifted.reshape(-1, N)).reshape(S, N, 4, 2)
    center = psi(points)
    h2 = (steps * steps)[:, None]
    m2, m1, p1, p2 = values[:, :, 0], values[:, :, 1], values[:, :, 2], values[:, :, 3]
    second = (-p2 + 16.0 * p1 - 30.0 * center[:, None, :] + 16.0 * m1 - m2) / 12.0
    laplacian = second.sum(axis=1) / h2

    scalar = 0.5 * np.sum(points * points, axis=1)
    if nu * (nu - 1.0) != 0.0:
        for i in range(N):
            for j in range(i + 1, N):
                scalar = scalar + nu * (nu - 1.0) / (points[:, i] - points[:, j]) ** 2
    tau = calogero_tau(points)
    v11, v12, v21, v22 = (entry.evaluate(tau) for entry in potential.entries())
    h_psi = -0.5 * laplacian + scalar[:, None] * center
    h_psi[:, 0] += v11 * center[:, 0] + v12 * center[:, 1]
    h_psi[:, 1] += v21 * center[:, 0] + v22 * center[:, 1]
    return h_psi, center


@dataclass
class ResidualReport:
    energy: float
    max_residual: float
    halving_gap: float
    samples: int
    fd_step: float

    def to_dict(self):
        return {"energy": self.energy, "max_residual": self.max_residual,
                "halving_gap": self.halving_gap, "samples": self.samples, "fd_step": self.fd_step}


def calogero_residual(params: CalogeroParams, energy: float, psi: ClosedFormFunction,
                      samples: int = 100, fd_step: float = 1e-3, tol: float = 1e-5,
                      min_separation: float = 0.2, seed: int = 0,
                      points: Optional[np.ndarray] = None) -> ResidualReport:
    """max over samples of |H psi - E psi| / (|E| |psi| + floor)"""
    if points is None:
        points = sample_points(params.N, samples, np.random.default_rng(seed), min_separation)
    else:
        points = np.asarray(points, dtype=float)
        too_close = pairwise_min_separation(points) < min_separation
        if np.any(too_close):
            raise SampleRejectedError(f"{int(too_close.sum())} sample points lie within {min_separation} "
                                      f"of a coincidence plane")
    nu = float(params.nu)
    potential = calogero_potential(params)
    energy = float(energy)
    steps = fd_step * np.maximum(1.0, np.abs(points).max(axis=1))

    h_psi, center = _hamiltonian_action(psi, points, nu, potential, steps)
    h_psi_half, _ = _hamiltonian_action(psi, points, nu, potential, steps / 2.0)
    norms = np.linalg.norm(center, axis=1)
    floor = 1e-12 * max(norms.max(), 1e-300)
    scale = abs(energy) * norms + floor
    residual = np.linalg.norm(h_psi_half - energy * center, axis=1) / scale
    gap = np.linalg.norm(h_psi - h_psi_half, axis=1) / scale
    if gap.max() > 10.0 * tol:
        raise StepSizeError(f"Step halving changed H psi by {gap.max():.3g} (> {10 * tol:.3g}); reduce fd_step")
    report = ResidualReport(energy, float(residual.max()), float(gap.max()), len(points), fd_step)
    logger.debug(f"Calogero residual at E = {energy:.12g}: {report.max_residual:.3g}")
    return report


@dataclass
class ReadingOutcome:
    reading: str
    certified: bool
    dimension: Optional[int] = None
    locator: str = ""
    residual_term: str = ""
    residuals: List[ResidualReport] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)
    tol: float = 1e-5

    @property
    def succeeded(self) -> bool:
        return self.certified and bool(self.residuals) and all(r.max_residual < self.tol for r in self.residuals)

    def to_dict(self):
        return {"reading": self.reading, "certified": self.certified, "dimension": self.dimension,
                "succeeded": self.succeeded, "locator": self.locator, "residual_term": self.residual_term,
                "residuals": [r.to_dict() for r in self.residuals], "skipped": self.skipped}


@dataclass
class CalogeroReport:
    params: CalogeroParams
    outcomes: List[ReadingOutcome]

    @property
    def succeeded_readings(self) -> List[str]:
        return [o.reading for o in self.outcomes if o.succeeded]

    def summary(self) -> str:
        if self.succeeded_readings:
            return "reading(s) reproducing the N-body spectrum: " + ", ".join(self.succeeded_readings)
        return "no reading reproduced the N-body spectrum"

    def to_dict(self):
        return {"model": self.params.to_dict(), "summary": self.summary(),
                "succeeded": self.succeeded_readings, "readings": [o.to_dict() for o in self.outcomes]}


def _oracle_gauge(params: CalogeroParams, space) -> GaugeFactor:
    if isinstance(space.prefactor, GaugeFactor):
        return space.prefactor
    return GaugeFactor(params.eps, LaurentPoly.zero("tau"))


def check_reading(params: CalogeroParams, reading: str, samples: int = 100, fd_step: float = 1e-3,
                  tol: float = 1e-5, min_separation: float = 0.2, seed: int = 0) -> ReadingOutcome:
    op, space = build_calogero(params, reading)
    result = certify(op, space)
    if not isinstance(result, Certificate):
        logger.info(f"Calogero reading {reading}: {result.locator}")
        return ReadingOutcome(reading, False, locator=result.locator,
                              residual_term=result.residual_text(), tol=tol)
    outcome = ReadingOutcome(reading, True, dimension=result.dimension, tol=tol)
    gauge = _oracle_gauge(params, space)
    spectrum = algebraic_spectrum(result)
    for ev in spectrum.eigenvalues:
        if ev.is_complex or ev.multiplicity > 1:
            outcome.skipped.append(f"{ev.value} (multiplicity {ev.multiplicity})")
            continue
        vector = eigenvectors(result, ev.value)[0]
        psi = reconstruct_eigenfunction(vector, space, model="calogero", gauge=gauge, nu=params.nu)
        outcome.residuals.append(calogero_residual(params, ev.value.real, psi, samples=samples,
                                                   fd_step=fd_step, tol=tol,
                                                   min_separation=min_separation, seed=seed))
    return outcome


def calogero_report(params: CalogeroParams, samples: int = 100, fd_step: float = 1e-3,
                    tol: float = 1e-5, min_separation: float = 0.2, seed: int = 0,
                    readings=CALOGERO_READINGS) -> CalogeroReport:
    """Certify each reading and run the N-body oracle on the certified ones"""
    outcomes = [check_reading(params, reading, samples, fd_step, tol, min_separation, seed)
                for reading in readings]
    report = CalogeroReport(params, outcomes)
    logger.info(report.summary())
    return report

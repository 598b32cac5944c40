"""Finite-difference eigensolvers for the line and periodic problems and the
matching of numeric levels against algebraic eigenvalues."""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from src.core.elliptic import MatEllipticOp, agm_complete_K
from src.core.errors import ConvergenceError, ModelError
from src.core.models import LameParams, SexticParams, build_lame, sextic_potential
from src.core.polyalg import PolyMat2

logger = logging.getLogger(__name__)

MIN_POINTS = 64
# 2*npoints up to this size goes to the dense symmetric solver
DENSE_LIMIT = 6000
# auto box: smallest L with (p2/2) L^4 + p1 L^2 above this wall
WALL_HEIGHT = 40.0


@dataclass(frozen=True)
class GridSpec:
    npoints: int
    domain: str = "line"
    L: Optional[float] = None

    def __post_init__(self):
        if self.npoints < MIN_POINTS:
            raise ValueError(f"Grid needs at least {MIN_POINTS} points, got {self.npoints}")
        if self.domain not in ("line", "periodic"):
            raise ValueError(f"Unknown grid domain {self.domain!r}")
        if self.L is not None and self.L <= 0:
            raise ValueError(f"Box half-width must be positive, got {self.L}")

    def line_points(self, L: float) -> Tuple[np.ndarray, float]:
        """Interior nodes of [-L, L] with Dirichlet ends"""
        h = 2.0 * L / (self.npoints + 1)
        return -L + h * np.arange(1, self.npoints + 1), h

    def periodic_points(self, period: float) -> Tuple[np.ndarray, float]:
        h = period / self.npoints
        return h * np.arange(self.npoints), h


def auto_line_length(params: SexticParams) -> float:
    p1, p2 = float(params.p1), float(params.p2)
    if p2 <= 0:
        raise ModelError(f"Line solver needs a confining potential, p2 = {params.p2}")
    u = (-p1 + math.sqrt(p1 * p1 + 2.0 * p2 * WALL_HEIGHT)) / p2
    return math.sqrt(u) * (1.0 + 1e-9)


def _block_hamiltonian(n: int, h: float, v11, v12, v22, periodic: bool):
    """Symmetric 2n x 2n sparse matrix of -D^2 * 1 + V"""
    main = np.full(n, 2.0 / (h * h))
    off = np.full(n - 1, -1.0 / (h * h))
    kinetic = scipy.sparse.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
    if periodic:
        kinetic[0, n - 1] = -1.0 / (h * h)
        kinetic[n - 1, 0] = -1.0 / (h * h)
    kinetic = kinetic.tocsr()
    return scipy.sparse.bmat([
        [kinetic + scipy.sparse.diags(v11), scipy.sparse.diags(v12)],
        [scipy.sparse.diags(v12), kinetic + scipy.sparse.diags(v22)],
    ], format="csc")


def _lowest_eigenvalues(H, count: int, lower_bound: float) -> np.ndarray:
    size = H.shape[0]
    if count < 1 or count > size:
        raise ValueError(f"Requested {count} eigenvalues of a {size}x{size} matrix")
    try:
        if size <= DENSE_LIMIT:
            values = scipy.linalg.eigh(H.toarray(), eigvals_only=True, subset_by_index=[0, count - 1])
        else:
            logger.debug(f"Sparse shift-invert eigensolve, size {size}, shift {lower_bound}")
            values = scipy.sparse.linalg.eigsh(H, k=count, sigma=lower_bound, which="LM",
                                               return_eigenvectors=False)
    except scipy.sparse.linalg.ArpackNoConvergence as e:
        raise ConvergenceError(f"Sparse eigensolver did not converge: {e}") from e
    except scipy.linalg.LinAlgError as e:
        raise ConvergenceError(f"Dense eigensolver failed: {e}") from e
    return np.sort(np.asarray(values, dtype=float))


def _shift_below(v11, v12, v22) -> float:
    # kinetic part is non-negative, so this bounds the spectrum from below
    return float(min(v11.min(), v22.min()) - np.abs(v12).max() - 1.0)


def solve_line(source: Union[SexticParams, PolyMat2], grid: GridSpec, count: int) -> np.ndarray:
    """Lowest eigenvalues of -psi'' + M(y) psi on [-L, L] with Dirichlet ends.

    ``source`` is a sextic parameter set or any PolyMat2 potential in y; the
    latter needs an explicit box half-width on the grid.
    """
    if isinstance(source, SexticParams):
        potential = sextic_potential(source)
        L = grid.L if grid.L is not None else auto_line_length(source)
    else:
        potential = source
        if grid.L is None:
            raise ValueError("A bare potential needs an explicit box half-width L")
        L = grid.L
    y, h = grid.line_points(L)
    v11, v12, v21, v22 = (entry.evaluate(y) for entry in potential.entries())
    if not np.allclose(v12, v21):
        raise ModelError("Line potential must be symmetric")
    H = _block_hamiltonian(grid.npoints, h, v11, v12, v22, periodic=False)
    logger.info(f"Line solve: npoints {grid.npoints}, L = {L:.6g}, h = {h:.3g}")
    return _lowest_eigenvalues(H, count, _shift_below(v11, v12, v22))


def solve_periodic(source: Union[LameParams, MatEllipticOp], grid: GridSpec, count: int) -> np.ndarray:
    """Lowest eigenvalues on [0, 4K(k^2)) with the wraparound stencil"""
    op = build_lame(source)[0] if isinstance(source, LameParams) else source
    period = 4.0 * agm_complete_K(float(op.ksq))
    z, h = grid.periodic_points(period)
    v11, v12, _, v22 = op.potential_at(z)
    H = _block_hamiltonian(grid.npoints, h, v11, v12, v22, periodic=True)
    logger.info(f"Periodic solve: npoints {grid.npoints}, period {period:.12g}")
    return _lowest_eigenvalues(H, count, _shift_below(v11, v12, v22))


# matching

@dataclass
class MatchRow:
    algebraic: complex
    numeric: Optional[float]
    rel_err: Optional[float]
    confirmed: bool
    complex_value: bool = False
    note: str = ""

    def to_dict(self, model: str = "", space: str = ""):
        return {"model": model, "space": space,
                "algebraic": self.algebraic.real if not self.complex_value else str(self.algebraic),
                "numeric": self.numeric, "rel_err": self.rel_err,
                "confirmed": self.confirmed, "note": self.note}


@dataclass
class SpectrumMatchReport:
    rows: List[MatchRow] = field(default_factory=list)
    rel_tol: float = 1e-3
    model: str = ""
    space: str = ""

    @property
    def all_confirmed(self) -> bool:
        return all(row.confirmed for row in self.rows if not row.complex_value)

    @property
    def unmatched(self) -> List[complex]:
        return [row.algebraic for row in self.rows if not row.confirmed]

    @property
    def worst_error(self) -> float:
        errors = [row.rel_err for row in self.rows if row.rel_err is not None]
        return max(errors) if errors else 0.0

    def records(self) -> List[dict]:
        return [row.to_dict(self.model, self.space) for row in self.rows]

    def to_dict(self):
        return {"model": self.model, "space": self.space, "rel_tol": self.rel_tol,
                "all_confirmed": self.all_confirmed,
                "confirmed": sum(1 for row in self.rows if row.confirmed),
                "rows": self.records()}


def _is_complex(value: complex) -> bool:
    return abs(value.imag) > 1e-10 * (1.0 + abs(value.real))


def match_spectra(algebraic: Sequence, numeric: Sequence[float], rel_tol: float,
                  model: str = "", space: str = "") -> SpectrumMatchReport:
    """Greedy nearest-first injective matching"""
    if rel_tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {rel_tol}")
    algebraic = [complex(a) for a in algebraic]
    numeric = [float(v) for v in numeric]
    real_indices = [i for i, a in enumerate(algebraic) if not _is_complex(a)]

    def error(i: int, j: int) -> float:
        a = algebraic[i].real
        return abs(a - numeric[j]) / (1.0 + abs(a))

    candidates = sorted((error(i, j), i, j) for i in real_indices for j in range(len(numeric)))
    assigned = {}
    owner = {}
    for err, i, j in candidates:
        if i in assigned or j in owner:
            continue
        assigned[i] = (j, err)
        owner[j] = i

    report = SpectrumMatchReport(rel_tol=rel_tol, model=model, space=space)
    for i, a in enumerate(algebraic):
        if i not in real_indices:
            report.rows.append(MatchRow(a, None, None, False, True,
                                        "complex: no numeric counterpart expected from symmetric discretization"))
            continue
        if i not in assigned:
            report.rows.append(MatchRow(a, None, None, False, note="no numeric value left"))
            continue
        j, err = assigned[i]
        note = ""
        nearest = min(range(len(numeric)), key=lambda k: error(i, k))
        if nearest != j:
            note = f"ambiguous: nearest numeric value claimed by algebraic #{owner[nearest]}"
        report.rows.append(MatchRow(a, numeric[j], err, err <= rel_tol, note=note))
    for row in report.rows:
        if not row.confirmed and not row.complex_value:
            logger.warning(f"Warning: algebraic eigenvalue {row.algebraic.real:.12g} unconfirmed at tol {rel_tol}")
    return report

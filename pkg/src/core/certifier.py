"""Exact invariance certificates and the algebraic spectrum of the finite block.

``certify`` proves H V ⊆ V by exact computation and returns the representation
matrix, or the first basis element whose image leaves the space.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from src.core.diffop import GaugeFactor, MatDiffOp2
from src.core.elliptic import PARTS, EllipticElement, MatEllipticOp, apply_elliptic, jacobi_eval
from src.core.errors import AmbientOverflowError, ModelError, TrackMismatchError
from src.core.exactfield import QuadExt, format_scalar, normalize
from src.core.models import (TRACK_ELLIPTIC, TRACK_POLYNOMIAL, EllipticPrefactor, SpaceDescriptor,
                             calogero_ground_state, calogero_tau)
from src.core.polyalg import (LaurentPoly, PolyVec2, identity_matrix, poly_divmod, poly_gcd,
                              poly_monic, polys_to_rows, solve_columns)

logger = logging.getLogger(__name__)

# |Im| above this fraction of (1 + |Re|) marks a complex eigenvalue
COMPLEX_TOL = 1e-10
ABERTH_MAX_ITER = 500
NEWTON_DPS = 60
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class BasisElement:
    index: int
    slot: str
    degree: int
    realized: object

    def label(self) -> str:
        return f"#{self.index} ({self.slot}, x^{self.degree})"


@dataclass
class Certificate:
    space: SpaceDescriptor
    matrix: List[List[object]]
    basis: List[BasisElement]
    realized_mixer: bool = False
    recheck_passed: bool = True

    @property
    def dimension(self) -> int:
        return len(self.matrix)

    @property
    def track(self) -> str:
        return self.space.track

    def split(self) -> int:
        """Number of top-slot coordinates"""
        return sum(1 for b in self.basis if b.slot == "top")

    def is_block_diagonal(self) -> bool:
        k = self.split()
        d = self.dimension
        return all(self.matrix[i][j] == 0
                   for i in range(d) for j in range(d) if (i < k) != (j < k))

    def charpoly(self) -> List[object]:
        return charpoly_exact(self.matrix)

    def float_matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.matrix], dtype=float).reshape(
            self.dimension, self.dimension)

    def to_dict(self, spectrum: Optional["SpectrumResult"] = None):
        out = {"status": "certified", "dim": self.dimension,
               "space": self.space.to_dict(),
               "realized_mixer": self.realized_mixer,
               "recheck": self.recheck_passed,
               "matrix": [[format_scalar(v) for v in row] for row in self.matrix],
               "charpoly": [format_scalar(c) for c in self.charpoly()]}
        if spectrum is not None:
            out.update(spectrum.to_dict())
        return out


@dataclass
class Counterexample:
    space: SpaceDescriptor
    index: int
    residual: object
    locator: str

    def residual_text(self) -> str:
        if isinstance(self.residual, tuple):
            return "(" + ", ".join(str(c) for c in self.residual) + ")"
        return str(self.residual)

    def to_dict(self):
        return {"status": "counterexample", "space": self.space.to_dict(), "index": self.index,
                "residual": self.residual_text(), "locator": self.locator}


CertifyResult = Union[Certificate, Counterexample]


# basis and images

def realize_basis(space: SpaceDescriptor, apply_mixer: bool = True) -> List[BasisElement]:
    basis = []
    for index, (slot, j) in enumerate(space.coordinates()):
        vec = space.coordinate_vector(slot, j)
        if apply_mixer:
            vec = space.mixer.apply(vec)
        if space.track == TRACK_ELLIPTIC:
            realized = space.prefactor.apply(vec)
        else:
            realized = vec
        basis.append(BasisElement(index, slot, j, realized))
    return basis


def _check_track(op, space: SpaceDescriptor):
    if space.track == TRACK_POLYNOMIAL:
        if not isinstance(op, MatDiffOp2):
            raise TrackMismatchError(f"Space {space.name} is polynomial but operator is {type(op).__name__}")
        if op.var != space.var:
            raise TrackMismatchError(f"Operator in {op.var} for space in {space.var}")
    elif space.track == TRACK_ELLIPTIC:
        if not isinstance(op, MatEllipticOp):
            raise TrackMismatchError(f"Space {space.name} is elliptic but operator is {type(op).__name__}")
        if not isinstance(space.prefactor, EllipticPrefactor):
            raise TrackMismatchError(f"Elliptic space {space.name} needs an elliptic prefactor")
        if space.prefactor.ksq != op.ksq:
            raise TrackMismatchError(f"Prefactor k^2 = {space.prefactor.ksq}, operator k^2 = {op.ksq}")
    else:
        raise TrackMismatchError(f"Unknown track {space.track!r}")


def _apply(op, element):
    if isinstance(op, MatEllipticOp):
        return apply_elliptic(op, element)
    return op.apply(element)


def _slots(element) -> Tuple[LaurentPoly, ...]:
    """Flatten a realized element into LaurentPoly slots for coordinate extraction"""
    if isinstance(element, PolyVec2):
        return element.top, element.bottom
    return tuple(component.part(part) for component in element for part in PARTS)


def _combine(basis: Sequence[BasisElement], coefficients: Sequence, template):
    """sum_i c_i b_i in the representation of the basis"""
    if isinstance(template, PolyVec2):
        total = PolyVec2.zero(template.var)
        for b, c in zip(basis, coefficients):
            if c != 0:
                total = total + b.realized.scale(c)
        return total
    ksq = template[0].ksq
    top, bottom = EllipticElement.zero(ksq), EllipticElement.zero(ksq)
    for b, c in zip(basis, coefficients):
        if c != 0:
            top = top + b.realized[0] * c
            bottom = bottom + b.realized[1] * c
    return top, bottom


def _difference(image, combination):
    if isinstance(image, PolyVec2):
        return image - combination
    return image[0] - combination[0], image[1] - combination[1]


def _is_zero(element) -> bool:
    if isinstance(element, PolyVec2):
        return element.is_zero()
    return all(c.is_zero() for c in element)


def _weight(element: EllipticElement) -> int:
    """Upper bound on the x-degree after reducing products with this element"""
    return max((p.max_degree + a + b + e for (a, b, e), p in element.parts()), default=0)


def _ambient_bound(op: MatEllipticOp, basis: Sequence[BasisElement]) -> int:
    basis_weight = max((_weight(c) for b in basis for c in b.realized), default=0)
    potential_weight = max(_weight(e) for e in op.entries())
    # two derivatives add at most 2 each
    return basis_weight + max(potential_weight, 4) + 2


def _transpose(columns: List[List[object]]) -> List[List[object]]:
    d = len(columns)
    return [[normalize(columns[j][i]) for j in range(d)] for i in range(d)]


def _recheck(op, basis: Sequence[BasisElement], matrix, images) -> bool:
    d = len(basis)
    for j in range(d):
        column = [matrix[i][j] for i in range(d)]
        if not _is_zero(_difference(images[j], _combine(basis, column, images[j]))):
            return False
    return True


# certification

def _certify_by_degree(op: MatDiffOp2, space: SpaceDescriptor, basis: List[BasisElement]) -> CertifyResult:
    n, m = space.degrees
    columns, images = [], []
    for b in basis:
        image = op.apply(b.realized)
        if not (image.top.in_degree_space(n) and image.bottom.in_degree_space(m)):
            residual = PolyVec2(image.top.truncate_above(n), image.bottom.truncate_above(m))
            locator = (f"basis {b.label()}: image has terms outside P({n}) + P({m}): {residual}")
            logger.info(f"Counterexample for {space.name}: {locator}")
            return Counterexample(space, b.index, residual, locator)
        images.append(image)
        columns.append([image.top.coeff(j) for j in range(n + 1)]
                       + [image.bottom.coeff(j) for j in range(m + 1)])
    matrix = _transpose(columns)
    return Certificate(space, matrix, basis, realized_mixer=False,
                       recheck_passed=_recheck(op, basis, matrix, images))


def _certify_by_solve(op, space: SpaceDescriptor, basis: List[BasisElement], realized_mixer: bool) -> CertifyResult:
    images = [_apply(op, b.realized) for b in basis]
    if isinstance(op, MatEllipticOp):
        bound = _ambient_bound(op, basis)
        for b, image in zip(basis, images):
            degree = max(c.max_x_degree for c in image)
            if degree > bound:
                raise AmbientOverflowError(f"Image of basis {b.label()} has x-degree {degree} > bound {bound}")
    d = len(basis)
    keys, vectors = polys_to_rows([_slots(b.realized) for b in basis] + [_slots(img) for img in images])
    A = [[vectors[j][i] for j in range(d)] for i in range(len(keys))]
    solutions = solve_columns(A, vectors[d:])
    columns = []
    for b, image, (solution, consistent) in zip(basis, images, solutions):
        if not consistent:
            residual = _difference(image, _combine(basis, solution, image))
            locator = f"basis {b.label()}: image is not in the span of the realized basis"
            logger.info(f"Counterexample for {space.name}: {locator}")
            return Counterexample(space, b.index, residual, locator)
        columns.append(solution)
    matrix = _transpose(columns)
    return Certificate(space, matrix, basis, realized_mixer=realized_mixer,
                       recheck_passed=_recheck(op, basis, matrix, images))


def certify(op, space: SpaceDescriptor, realized: bool = False) -> CertifyResult:
    """Certificate or Counterexample for op acting on the space.

    On the polynomial track ``op`` must already be mixer-conjugated unless
    ``realized`` is set, in which case the basis P e_j is decomposed exactly.
    """
    _check_track(op, space)
    if not space.is_applicable():
        raise ModelError(f"Space {space.name} with degrees {space.degrees} is empty")
    if space.track == TRACK_POLYNOMIAL and not realized:
        basis = realize_basis(space, apply_mixer=False)
        result = _certify_by_degree(op, space, basis)
    else:
        basis = realize_basis(space, apply_mixer=True)
        result = _certify_by_solve(op, space, basis, realized_mixer=space.track == TRACK_POLYNOMIAL)
    if isinstance(result, Certificate):
        logger.info(f"Certified {space.name}: dim {result.dimension}")
        if not result.recheck_passed:
            logger.error(f"Error: exact recheck failed for {space.name}")
    return result


# characteristic polynomials

def _as_matrix(M) -> List[List[object]]:
    return M.matrix if isinstance(M, Certificate) else [list(row) for row in M]


def charpoly_exact(M) -> List[object]:
    """Coefficients [1, c1, ..., cd] of det(lambda I - M), Faddeev-LeVerrier"""
    A = [[normalize(v) for v in row] for row in _as_matrix(M)]
    d = len(A)
    coeffs = [Fraction(1)]
    N = identity_matrix(d)
    for k in range(1, d + 1):
        AN = [[normalize(sum((A[i][l] * N[l][j] for l in range(d)), Fraction(0))) for j in range(d)]
              for i in range(d)]
        c = normalize(-sum((AN[i][i] for i in range(d)), Fraction(0)) / k)
        coeffs.append(c)
        N = [[normalize(AN[i][j] + c) if i == j else AN[i][j] for j in range(d)] for i in range(d)]
    return coeffs


def charpoly_multiply(p: Sequence, q: Sequence) -> List[object]:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = normalize(out[i + j] + a * b)
    return out


def block_charpolys(cert: Certificate) -> Optional[Tuple[List[object], List[object]]]:
    """Top-left and bottom-right block characteristic polynomials, or None when coupled"""
    if not cert.is_block_diagonal():
        return None
    k = cert.split()
    top = [row[:k] for row in cert.matrix[:k]]
    bottom = [row[k:] for row in cert.matrix[k:]]
    return charpoly_exact(top), charpoly_exact(bottom)


def _coeffs_to_poly(coeffs: Sequence, var: str = "lam") -> LaurentPoly:
    d = len(coeffs) - 1
    return LaurentPoly(var, {d - i: c for i, c in enumerate(coeffs)})


def square_free_factors(p: LaurentPoly) -> List[Tuple[LaurentPoly, int]]:
    """Yun decomposition p = prod a_i^i with each a_i square-free and monic"""
    p = poly_monic(p)
    if p.is_zero() or p.max_degree == 0:
        return []
    dp = p.derivative()
    a = poly_gcd(p, dp)
    b, _ = poly_divmod(p, a)
    c, _ = poly_divmod(dp, a)
    d = c - b.derivative()
    factors = []
    i = 1
    while b.max_degree > 0:
        a = poly_gcd(b, d)
        b, _ = poly_divmod(b, a)
        c, _ = poly_divmod(d, a)
        d = c - b.derivative()
        if a.max_degree > 0:
            factors.append((a, i))
        i += 1
    return factors


def _descending(p: LaurentPoly) -> List[object]:
    return [p.coeff(e) for e in range(p.max_degree, -1, -1)]


def aberth_roots(coeffs: Sequence[complex], tol: float = 1e-14,
                 max_iter: int = ABERTH_MAX_ITER) -> Tuple[np.ndarray, bool]:
    """Simultaneous roots of a polynomial given highest-first coefficients"""
    coeffs = np.asarray(coeffs, dtype=complex)
    coeffs = coeffs / coeffs[0]
    n = len(coeffs) - 1
    if n == 1:
        return np.array([-coeffs[1]]), True
    deriv = np.polyder(coeffs)
    radius = 1.0 + np.max(np.abs(coeffs[1:]))
    # offset angle keeps the seeds off the real axis symmetry
    angles = 2.0 * np.pi * np.arange(n) / n + 0.4
    z = radius * np.exp(1j * angles)
    for _ in range(max_iter):
        converged = True
        for i in range(n):
            zi = z[i]
            pv = np.polyval(coeffs, zi)
            dpv = np.polyval(deriv, zi)
            others = np.delete(z, i)
            sum_term = np.sum(1.0 / (zi - others))
            denom = dpv - pv * sum_term
            if denom == 0:
                denom = 1e-300
            delta = pv / denom
            if abs(delta) > tol * (1.0 + abs(zi)):
                converged = False
            z[i] = zi - delta
        if converged:
            return z, True
    return z, False


def _to_mp(c):
    if isinstance(c, QuadExt):
        return (mpmath.mpf(c.a.numerator) / c.a.denominator
                + mpmath.mpf(c.b.numerator) / c.b.denominator
                * mpmath.sqrt(mpmath.mpf(c.r.numerator) / c.r.denominator))
    c = Fraction(c)
    return mpmath.mpf(c.numerator) / c.denominator


def newton_refine(coeffs: Sequence, z0: complex) -> Tuple[complex, bool]:
    """Newton iteration on the exact coefficients in high precision"""
    with mpmath.workdps(NEWTON_DPS):
        cs = [_to_mp(c) for c in coeffs]
        z = mpmath.mpc(z0)
        eps = mpmath.mpf(10) ** (-NEWTON_DPS + 10)
        for _ in range(NEWTON_MAX_ITER):
            value, slope = mpmath.polyval(cs, z, derivative=True)
            if slope == 0:
                return complex(z), value == 0
            step = value / slope
            z = z - step
            if abs(step) <= eps * (1 + abs(z)):
                return complex(z), True
        return complex(z), False


@dataclass
class Eigenvalue:
    value: complex
    multiplicity: int

    @property
    def is_complex(self) -> bool:
        return abs(self.value.imag) > COMPLEX_TOL * (1.0 + abs(self.value.real))

    def to_dict(self):
        return {"re": float(self.value.real), "im": float(self.value.imag),
                "multiplicity": self.multiplicity, "complex": self.is_complex}


@dataclass
class SpectrumResult:
    charpoly: List[object]
    eigenvalues: List[Eigenvalue] = field(default_factory=list)
    converged: bool = True

    def values(self) -> List[complex]:
        out = []
        for ev in self.eigenvalues:
            out.extend([ev.value] * ev.multiplicity)
        return out

    def real_values(self) -> List[float]:
        return sorted(ev.value.real for ev in self.eigenvalues if not ev.is_complex
                      for _ in range(ev.multiplicity))

    def has_complex(self) -> bool:
        return any(ev.is_complex for ev in self.eigenvalues)

    def to_dict(self):
        return {"eigenvalues": [ev.to_dict() for ev in self.eigenvalues],
                "spectrum_converged": self.converged}


def algebraic_spectrum(M) -> SpectrumResult:
    """Roots of the exact characteristic polynomial with multiplicities"""
    coeffs = charpoly_exact(M)
    result = SpectrumResult(charpoly=coeffs)
    for factor, multiplicity in square_free_factors(_coeffs_to_poly(coeffs)):
        exact = _descending(factor)
        seeds, ok = aberth_roots([complex(float(c)) for c in exact])
        if not ok:
            logger.warning(f"Warning: Aberth iteration hit the cap on a degree {factor.max_degree} factor")
        for seed in seeds:
            root, refined = newton_refine(exact, complex(seed))
            if not refined:
                logger.warning(f"Warning: Newton refinement did not settle near {seed}")
            ok = ok and refined
            ev = Eigenvalue(root, multiplicity)
            if not ev.is_complex:
                ev = Eigenvalue(complex(root.real, 0.0), multiplicity)
            result.eigenvalues.append(ev)
        result.converged = result.converged and ok
    result.eigenvalues.sort(key=lambda ev: (ev.value.real, ev.value.imag))
    return result


def eigenvectors(cert: Certificate, value: complex, count: int = 1) -> np.ndarray:
    """Null vectors of M - value*I, one per row"""
    M = cert.float_matrix().astype(complex) - value * np.eye(cert.dimension)
    _, _, vh = np.linalg.svd(M)
    return vh[-count:].conj()


# closed-form eigenfunctions

class ClosedFormFunction:
    """Symbolic description plus a float evaluator returning (..., 2) arrays"""

    def __init__(self, description: dict, evaluator: Callable[[np.ndarray], np.ndarray]):
        self.description = description
        self._evaluator = evaluator

    def __call__(self, points) -> np.ndarray:
        return self._evaluator(np.asarray(points, dtype=float))

    def __repr__(self):
        return f"ClosedFormFunction({self.description})"


def _real_vector(eigvec) -> np.ndarray:
    v = np.asarray(eigvec, dtype=complex)
    pivot = v[np.argmax(np.abs(v))]
    v = v / pivot
    if np.max(np.abs(v.imag)) > 1e-8:
        raise ValueError("Closed-form reconstruction needs a real eigenvector")
    return v.real


def reconstruct_eigenfunction(eigvec, space: SpaceDescriptor, model: Optional[str] = None,
                              gauge: Optional[GaugeFactor] = None, nu=None) -> ClosedFormFunction:
    """Eigenfunction sum_j v_j b_j multiplied back by the prefactor.

    ``model`` defaults to ``space.model``; Calogero spaces need ``nu`` and,
    for the printed reading, an explicit ``gauge``.
    """
    model = model or space.model
    v = _real_vector(eigvec)
    if len(v) != space.dimension:
        raise ValueError(f"Eigenvector length {len(v)} != dimension {space.dimension}")
    basis = realize_basis(space, apply_mixer=True)
    coefficients = [float(c) for c in v]

    if space.track == TRACK_ELLIPTIC:
        top, bottom = _combine(basis, coefficients, basis[0].realized)
        ksq = float(space.prefactor.ksq)

        def evaluate_elliptic(z):
            sn, cn, dn = jacobi_eval(z, ksq)
            return np.stack([top.evaluate(sn, cn, dn), bottom.evaluate(sn, cn, dn)], axis=-1)

        description = {"track": TRACK_ELLIPTIC, "prefactor": space.prefactor.label,
                       "top": str(top), "bottom": str(bottom)}
        return ClosedFormFunction(description, evaluate_elliptic)

    pair = _combine(basis, coefficients, basis[0].realized)
    factor = gauge if gauge is not None else space.prefactor

    if model == "calogero":
        if nu is None:
            raise ValueError("Calogero reconstruction needs nu")
        if factor is None:
            raise ValueError("Calogero reconstruction needs a gauge reading")

        def evaluate_calogero(points):
            tau = calogero_tau(points)
            scale = calogero_ground_state(points, nu) * factor.evaluate(tau)
            return np.stack([scale * pair.top.evaluate(tau), scale * pair.bottom.evaluate(tau)], axis=-1)

        description = {"track": TRACK_POLYNOMIAL, "model": "calogero", "gauge": factor.to_dict(),
                       "nu": str(nu), "top": str(pair.top), "bottom": str(pair.bottom)}
        return ClosedFormFunction(description, evaluate_calogero)

    def evaluate_line(y):
        x = y * y
        scale = factor.evaluate(y) if factor is not None else np.ones_like(y)
        return np.stack([scale * pair.top.evaluate(x), scale * pair.bottom.evaluate(x)], axis=-1)

    description = {"track": TRACK_POLYNOMIAL, "model": model,
                   "gauge": None if factor is None else factor.to_dict(),
                   "top": str(pair.top), "bottom": str(pair.bottom)}
    return ClosedFormFunction(description, evaluate_line)

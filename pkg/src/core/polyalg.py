"""Sparse univariate Laurent polynomials over exact scalars, their 2-vectors
and 2x2 matrices, parity splitting and exact linear solving."""
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import VariableMismatchError
from src.core.exactfield import QuadExt, normalize

logger = logging.getLogger(__name__)


def _coerce_coeff(c):
    if isinstance(c, bool):
        raise TypeError("Boolean coefficient")
    if isinstance(c, int):
        return Fraction(c)
    return c


def _format_coeff(c) -> str:
    if isinstance(c, QuadExt):
        return str(c)
    if isinstance(c, float):
        return repr(c)
    return str(c)


class LaurentPoly:
    """Sum of c_e * var^e over a finite set of integer exponents e.

    Zero coefficients are never stored. Coefficients are exact scalars for all
    algebra; float coefficients are tolerated for evaluation-only polynomials.
    """

    __slots__ = ("var", "_coeffs")

    def __init__(self, var: str, coeffs: Optional[Dict[int, object]] = None):
        self.var = var
        cleaned = {}
        for e, c in (coeffs or {}).items():
            c = _coerce_coeff(c)
            if c != 0:
                cleaned[int(e)] = c
        self._coeffs = cleaned

    @classmethod
    def zero(cls, var: str) -> "LaurentPoly":
        return cls(var)

    @classmethod
    def constant(cls, var: str, c) -> "LaurentPoly":
        return cls(var, {0: c})

    @classmethod
    def monomial(cls, var: str, exponent: int, c=1) -> "LaurentPoly":
        return cls(var, {exponent: c})

    # inspection

    def items(self) -> List[Tuple[int, object]]:
        return sorted(self._coeffs.items())

    def coeff(self, exponent: int):
        return self._coeffs.get(exponent, Fraction(0))

    def is_zero(self) -> bool:
        return not self._coeffs

    @property
    def max_degree(self) -> Optional[int]:
        return max(self._coeffs) if self._coeffs else None

    @property
    def min_degree(self) -> Optional[int]:
        return min(self._coeffs) if self._coeffs else None

    def is_polynomial(self) -> bool:
        return not self._coeffs or min(self._coeffs) >= 0

    def in_degree_space(self, n: int) -> bool:
        """Membership in P(n); P(-1) is the zero space"""
        if self.is_zero():
            return True
        return self.min_degree >= 0 and self.max_degree <= n

    def laurent_tail(self) -> "LaurentPoly":
        return LaurentPoly(self.var, {e: c for e, c in self._coeffs.items() if e < 0})

    def truncate_above(self, n: int) -> "LaurentPoly":
        """Terms of degree > n together with any negative powers"""
        return LaurentPoly(self.var, {e: c for e, c in self._coeffs.items() if e > n or e < 0})

    # arithmetic

    def _check(self, other: "LaurentPoly"):
        if other.var != self.var:
            raise VariableMismatchError(f"Variable mismatch: {self.var} vs {other.var}")

    def __add__(self, other):
        if isinstance(other, LaurentPoly):
            self._check(other)
            out = dict(self._coeffs)
            for e, c in other._coeffs.items():
                out[e] = out.get(e, 0) + c
            return LaurentPoly(self.var, out)
        return self + LaurentPoly.constant(self.var, other)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.var, {e: -c for e, c in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            self._check(other)
            out: Dict[int, object] = {}
            for e1, c1 in self._coeffs.items():
                for e2, c2 in other._coeffs.items():
                    out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
            return LaurentPoly(self.var, out)
        other = _coerce_coeff(other)
        return LaurentPoly(self.var, {e: c * other for e, c in self._coeffs.items()})

    def __rmul__(self, other):
        return self * other

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise ValueError("Negative powers of polynomials are not supported")
        result = LaurentPoly.constant(self.var, 1)
        for _ in range(exponent):
            result = result * self
        return result

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by var^k"""
        return LaurentPoly(self.var, {e + k: c for e, c in self._coeffs.items()})

    def derivative(self) -> "LaurentPoly":
        return LaurentPoly(self.var, {e - 1: c * e for e, c in self._coeffs.items() if e != 0})

    def map_coeffs(self, fn) -> "LaurentPoly":
        return LaurentPoly(self.var, {e: fn(c) for e, c in self._coeffs.items()})

    def rename(self, var: str) -> "LaurentPoly":
        return LaurentPoly(var, self._coeffs)

    def substitute_square(self, var: str) -> "LaurentPoly":
        """p(x) -> p(y^2) written in the variable ``var``"""
        return LaurentPoly(var, {2 * e: c for e, c in self._coeffs.items()})

    def evaluate(self, points):
        """Float evaluation; accepts scalars or numpy arrays"""
        points = np.asarray(points, dtype=float)
        total = np.zeros_like(points)
        for e, c in self._coeffs.items():
            total = total + float(c) * points ** e
        return total

    # comparison / printing

    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self.var == other.var and self._coeffs == other._coeffs
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash((self.var, frozenset(self._coeffs.items())))

    def __str__(self):
        if not self._coeffs:
            return "0"
        pieces = []
        for e, c in sorted(self._coeffs.items(), reverse=True):
            negative = not isinstance(c, QuadExt) and c < 0
            body = _format_coeff(-c if negative else c)
            if e != 0:
                body = f"{body}*{self.var}^{e}"
            if not pieces:
                pieces.append(f"-{body}" if negative else body)
            else:
                pieces.append(f"- {body}" if negative else f"+ {body}")
        return " ".join(pieces)

    def __repr__(self):
        return f"LaurentPoly({self.var!r}, {str(self)!r})"


def parity_split(p: LaurentPoly, var: str = "x") -> Tuple[LaurentPoly, LaurentPoly]:
    """p(y) = even(y^2) + y*odd(y^2)"""
    even, odd = {}, {}
    for e, c in p.items():
        if e % 2 == 0:
            even[e // 2] = c
        else:
            odd[(e - 1) // 2] = c
    return LaurentPoly(var, even), LaurentPoly(var, odd)


def parity_join(even: LaurentPoly, odd: LaurentPoly, var: str = "y") -> LaurentPoly:
    """Inverse of parity_split"""
    return even.substitute_square(var) + odd.substitute_square(var).shift(1)


class PolyVec2:
    """Pair (top, bottom) of Laurent polynomials in one variable"""

    __slots__ = ("top", "bottom")

    def __init__(self, top: LaurentPoly, bottom: LaurentPoly):
        if top.var != bottom.var:
            raise VariableMismatchError(f"PolyVec2 slots in {top.var} and {bottom.var}")
        self.top = top
        self.bottom = bottom

    @classmethod
    def zero(cls, var: str) -> "PolyVec2":
        return cls(LaurentPoly.zero(var), LaurentPoly.zero(var))

    @property
    def var(self) -> str:
        return self.top.var

    def __iter__(self):
        return iter((self.top, self.bottom))

    def __add__(self, other: "PolyVec2") -> "PolyVec2":
        return PolyVec2(self.top + other.top, self.bottom + other.bottom)

    def __sub__(self, other: "PolyVec2") -> "PolyVec2":
        return PolyVec2(self.top - other.top, self.bottom - other.bottom)

    def __neg__(self):
        return PolyVec2(-self.top, -self.bottom)

    def scale(self, c) -> "PolyVec2":
        return PolyVec2(self.top * c, self.bottom * c)

    def is_zero(self) -> bool:
        return self.top.is_zero() and self.bottom.is_zero()

    def __eq__(self, other):
        if not isinstance(other, PolyVec2):
            return NotImplemented
        return self.top == other.top and self.bottom == other.bottom

    def __hash__(self):
        return hash((self.top, self.bottom))

    def __str__(self):
        return f"({self.top}, {self.bottom})"

    __repr__ = __str__


class PolyMat2:
    """2x2 matrix of Laurent polynomials in one variable"""

    __slots__ = ("e11", "e12", "e21", "e22")

    def __init__(self, e11: LaurentPoly, e12: LaurentPoly, e21: LaurentPoly, e22: LaurentPoly):
        if len({e11.var, e12.var, e21.var, e22.var}) != 1:
            raise VariableMismatchError("PolyMat2 entries must share one variable")
        self.e11, self.e12, self.e21, self.e22 = e11, e12, e21, e22

    @property
    def var(self) -> str:
        return self.e11.var

    @classmethod
    def diag(cls, p: LaurentPoly, q: LaurentPoly) -> "PolyMat2":
        zero = LaurentPoly.zero(p.var)
        return cls(p, zero, zero, q)

    @classmethod
    def scalar(cls, p: LaurentPoly) -> "PolyMat2":
        return cls.diag(p, p)

    @classmethod
    def identity(cls, var: str) -> "PolyMat2":
        return cls.scalar(LaurentPoly.constant(var, 1))

    @classmethod
    def sigma1(cls, var: str) -> "PolyMat2":
        zero, one = LaurentPoly.zero(var), LaurentPoly.constant(var, 1)
        return cls(zero, one, one, zero)

    @classmethod
    def sigma3(cls, var: str) -> "PolyMat2":
        return cls.diag(LaurentPoly.constant(var, 1), LaurentPoly.constant(var, -1))

    @classmethod
    def pauli(cls, s0: LaurentPoly, s1: LaurentPoly, s3: LaurentPoly) -> "PolyMat2":
        """s0*1 + s1*sigma1 + s3*sigma3"""
        return cls(s0 + s3, s1, s1, s0 - s3)

    def entries(self) -> Tuple[LaurentPoly, LaurentPoly, LaurentPoly, LaurentPoly]:
        return self.e11, self.e12, self.e21, self.e22

    def apply(self, v: PolyVec2) -> PolyVec2:
        return PolyVec2(self.e11 * v.top + self.e12 * v.bottom,
                        self.e21 * v.top + self.e22 * v.bottom)

    def __add__(self, other: "PolyMat2") -> "PolyMat2":
        return PolyMat2(*(a + b for a, b in zip(self.entries(), other.entries())))

    def __sub__(self, other: "PolyMat2") -> "PolyMat2":
        return PolyMat2(*(a - b for a, b in zip(self.entries(), other.entries())))

    def __mul__(self, other: "PolyMat2") -> "PolyMat2":
        return PolyMat2(self.e11 * other.e11 + self.e12 * other.e21,
                        self.e11 * other.e12 + self.e12 * other.e22,
                        self.e21 * other.e11 + self.e22 * other.e21,
                        self.e21 * other.e12 + self.e22 * other.e22)

    def scale(self, c) -> "PolyMat2":
        return PolyMat2(*(e * c for e in self.entries()))

    def is_hermitian(self) -> bool:
        return self.e12 == self.e21

    def __eq__(self, other):
        if not isinstance(other, PolyMat2):
            return NotImplemented
        return self.entries() == other.entries()

    def __hash__(self):
        return hash(self.entries())

    def __str__(self):
        return f"[[{self.e11}, {self.e12}], [{self.e21}, {self.e22}]]"

    __repr__ = __str__


# univariate division, used for square-free decomposition

def poly_divmod(p: LaurentPoly, q: LaurentPoly) -> Tuple[LaurentPoly, LaurentPoly]:
    if q.is_zero():
        raise ZeroDivisionError("Polynomial division by zero")
    if not (p.is_polynomial() and q.is_polynomial()):
        raise ValueError("poly_divmod needs plain polynomials")
    quotient = LaurentPoly.zero(p.var)
    remainder = p
    lead_q = q.coeff(q.max_degree)
    while not remainder.is_zero() and remainder.max_degree >= q.max_degree:
        shift = remainder.max_degree - q.max_degree
        factor = normalize(remainder.coeff(remainder.max_degree) / lead_q)
        term = LaurentPoly.monomial(p.var, shift, factor)
        quotient = quotient + term
        remainder = remainder - term * q
    return quotient, remainder


def poly_monic(p: LaurentPoly) -> LaurentPoly:
    if p.is_zero():
        return p
    lead = p.coeff(p.max_degree)
    return p.map_coeffs(lambda c: normalize(c / lead))


def poly_gcd(p: LaurentPoly, q: LaurentPoly) -> LaurentPoly:
    """Monic gcd by the Euclidean algorithm"""
    a, b = p, q
    while not b.is_zero():
        _, r = poly_divmod(a, b)
        a, b = b, r
    return poly_monic(a)


# exact linear algebra

def _bareiss_eliminate(A: Sequence[Sequence], rhs_columns: Sequence[Sequence]):
    """Fraction-free row reduction of [A | B] to echelon form.

    Returns the reduced augmented rows and the list of (row, column) pivots.
    """
    n_rows = len(A)
    n_cols = len(A[0]) if n_rows else 0
    k = len(rhs_columns)
    M = [[normalize(v) for v in A[i]] + [normalize(rhs_columns[j][i]) for j in range(k)]
         for i in range(n_rows)]
    total = n_cols + k
    prev = Fraction(1)
    pivots = []
    row = 0
    for col in range(n_cols):
        if row >= n_rows:
            break
        pivot = next((i for i in range(row, n_rows) if M[i][col] != 0), None)
        if pivot is None:
            continue
        if pivot != row:
            M[row], M[pivot] = M[pivot], M[row]
        p = M[row][col]
        for i in range(row + 1, n_rows):
            factor = M[i][col]
            if factor == 0:
                # keep the fraction-free scaling uniform across rows
                for j in range(col + 1, total):
                    if M[i][j] != 0:
                        M[i][j] = p * M[i][j] / prev
                continue
            for j in range(col + 1, total):
                M[i][j] = (p * M[i][j] - factor * M[row][j]) / prev
            M[i][col] = Fraction(0)
        prev = p
        pivots.append((row, col))
        row += 1
    return M, pivots, n_cols


def _back_substitute(M, pivots, n_cols, rhs_index):
    x = [Fraction(0)] * n_cols
    for row, col in reversed(pivots):
        acc = M[row][n_cols + rhs_index]
        for j in range(col + 1, n_cols):
            if M[row][j] != 0 and x[j] != 0:
                acc = acc - M[row][j] * x[j]
        x[col] = normalize(acc / M[row][col])
    return x


def solve_columns(A: Sequence[Sequence], rhs_columns: Sequence[Sequence]):
    """Solve A x = b for several right-hand sides with one elimination.

    Returns a list of (solution, consistent) pairs. The solution always
    satisfies the pivot rows (free unknowns set to zero); ``consistent`` is
    False when some non-pivot row leaves a non-zero right-hand side.
    """
    if not A:
        return [([], all(normalize(v) == 0 for v in b)) for b in rhs_columns]
    M, pivots, n_cols = _bareiss_eliminate(A, rhs_columns)
    rank = len(pivots)
    results = []
    for j in range(len(rhs_columns)):
        consistent = all(M[i][n_cols + j] == 0 for i in range(rank, len(M)))
        results.append((_back_substitute(M, pivots, n_cols, j), consistent))
    return results


def exact_solve(A: Sequence[Sequence], b: Sequence) -> Optional[List]:
    """Exact solution of A x = b, or None when the system is inconsistent"""
    solution, consistent = solve_columns(A, [b])[0]
    return solution if consistent else None


def mat_vec(A: Sequence[Sequence], x: Sequence) -> List:
    return [normalize(sum((a * v for a, v in zip(row, x)), Fraction(0))) for row in A]


def identity_matrix(n: int) -> List[List[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def polys_to_rows(vectors: Iterable[Sequence[LaurentPoly]]):
    """Coordinate matrix of tuples of polynomials.

    Each input vector is a tuple of LaurentPoly slots; the coordinates are
    (slot, exponent) keys in sorted order. Returns (keys, columns) where
    columns[j][i] is the coefficient of key i in vector j.
    """
    vectors = list(vectors)
    keys = sorted({(slot, e) for v in vectors for slot, p in enumerate(v) for e, _ in p.items()})
    columns = [[v[slot].coeff(e) for slot, e in keys] for v in vectors]
    return keys, columns

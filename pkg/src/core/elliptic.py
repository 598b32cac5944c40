"""Jacobi elliptic functions: the exact algebra sum p_abe(x) sn^a cn^b dn^e
with x = sn^2, and a float evaluator for sn, cn, dn and K."""
import logging
import math
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from src.core.errors import ModelError, ModulusMismatchError
from src.core.exactfield import format_scalar, normalize
from src.core.polyalg import LaurentPoly

logger = logging.getLogger(__name__)

Part = Tuple[int, int, int]
PARTS = tuple((a, b, e) for a in (0, 1) for b in (0, 1) for e in (0, 1))
X = "x"

# Landen recursion cap; quadratic convergence needs far fewer levels
MAX_LANDEN_LEVELS = 40


class EllipticElement:
    """Finite sum sum_(a,b,e) p_abe(x) * sn^a cn^b dn^e with a, b, e in {0, 1}.

    Products are reduced eagerly with sn^2 = x, cn^2 = 1 - x and
    dn^2 = 1 - k^2 x. At k^2 = 0 the dn factor is identically one and the
    dn-parts are folded into their dn-free partners.
    """

    __slots__ = ("ksq", "_parts")

    def __init__(self, ksq, parts: Optional[Dict[Part, LaurentPoly]] = None):
        self.ksq = normalize(ksq)
        merged: Dict[Part, LaurentPoly] = {}
        for part, poly in (parts or {}).items():
            if not isinstance(poly, LaurentPoly):
                poly = LaurentPoly.constant(X, poly)
            a, b, e = part
            if self.ksq == 0 and e:
                part = (a, b, 0)
            merged[part] = merged[part] + poly if part in merged else poly
        self._parts = {p: q for p, q in merged.items() if not q.is_zero()}

    @classmethod
    def zero(cls, ksq) -> "EllipticElement":
        return cls(ksq)

    @classmethod
    def constant(cls, ksq, c) -> "EllipticElement":
        return cls(ksq, {(0, 0, 0): LaurentPoly.constant(X, c)})

    @classmethod
    def from_poly(cls, ksq, p: LaurentPoly, part: Part = (0, 0, 0)) -> "EllipticElement":
        return cls(ksq, {part: p.rename(X)})

    @classmethod
    def monomial(cls, ksq, a: int, b: int, e: int, c=1) -> "EllipticElement":
        return cls(ksq, {(a, b, e): LaurentPoly.constant(X, c)})

    @classmethod
    def x(cls, ksq) -> "EllipticElement":
        return cls(ksq, {(0, 0, 0): LaurentPoly.monomial(X, 1)})

    @classmethod
    def sn(cls, ksq) -> "EllipticElement":
        return cls.monomial(ksq, 1, 0, 0)

    @classmethod
    def cn(cls, ksq) -> "EllipticElement":
        return cls.monomial(ksq, 0, 1, 0)

    @classmethod
    def dn(cls, ksq) -> "EllipticElement":
        return cls.monomial(ksq, 0, 0, 1)

    @classmethod
    def power_product(cls, ksq, a: int, b: int, e: int) -> "EllipticElement":
        """sn^a cn^b dn^e for arbitrary non-negative exponents"""
        x = LaurentPoly.monomial(X, 1)
        one = LaurentPoly.constant(X, 1)
        poly = (x ** (a // 2)) * ((one - x) ** (b // 2)) * ((one - x * ksq) ** (e // 2))
        return cls(ksq, {(a % 2, b % 2, e % 2): poly})

    def parts(self):
        return sorted(self._parts.items())

    def part(self, key: Part) -> LaurentPoly:
        return self._parts.get(key, LaurentPoly.zero(X))

    def is_zero(self) -> bool:
        return not self._parts

    @property
    def max_x_degree(self) -> int:
        return max((p.max_degree for p in self._parts.values()), default=-1)

    def _check(self, other: "EllipticElement"):
        if other.ksq != self.ksq:
            raise ModulusMismatchError(f"Modulus mismatch: k^2 = {self.ksq} vs {other.ksq}")

    def __add__(self, other):
        if not isinstance(other, EllipticElement):
            other = EllipticElement.constant(self.ksq, other)
        self._check(other)
        parts = dict(self._parts)
        for key, poly in other._parts.items():
            parts[key] = parts[key] + poly if key in parts else poly
        return EllipticElement(self.ksq, parts)

    __radd__ = __add__

    def __neg__(self):
        return EllipticElement(self.ksq, {k: -p for k, p in self._parts.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, EllipticElement):
            return ell_mul(self, other)
        if isinstance(other, LaurentPoly):
            return ell_mul(self, EllipticElement.from_poly(self.ksq, other))
        return EllipticElement(self.ksq, {k: p * other for k, p in self._parts.items()})

    def __rmul__(self, other):
        return self * other

    def __eq__(self, other):
        if isinstance(other, EllipticElement):
            return self.ksq == other.ksq and self._parts == other._parts
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash((self.ksq, frozenset(self._parts.items())))

    def evaluate(self, sn, cn, dn):
        sn, cn, dn = (np.asarray(v, dtype=float) for v in (sn, cn, dn))
        x = sn * sn
        total = np.zeros_like(x)
        for (a, b, e), poly in self._parts.items():
            total = total + poly.evaluate(x) * sn ** a * cn ** b * dn ** e
        return total

    def __call__(self, z):
        sn, cn, dn = jacobi_eval(z, float(self.ksq))
        return self.evaluate(sn, cn, dn)

    def __str__(self):
        if not self._parts:
            return "0"
        names = ("sn", "cn", "dn")
        pieces = []
        for (a, b, e), poly in self.parts():
            factors = [n for n, flag in zip(names, (a, b, e)) if flag]
            label = "*".join(factors)
            pieces.append(f"({poly})*{label}" if label else f"({poly})")
        return " + ".join(pieces)

    __repr__ = __str__

    def to_dict(self):
        return {"ksq": format_scalar(self.ksq),
                "parts": {f"({a},{b},{e})": str(p) for (a, b, e), p in self.parts()}}


def _reduction_factor(ksq, a: int, b: int, e: int) -> LaurentPoly:
    factor = LaurentPoly.constant(X, 1)
    if a == 2:
        factor = factor * LaurentPoly.monomial(X, 1)
    if b == 2:
        factor = factor * LaurentPoly(X, {0: 1, 1: -1})
    if e == 2:
        factor = factor * LaurentPoly(X, {0: 1, 1: -ksq})
    return factor


def ell_mul(u: EllipticElement, v: EllipticElement) -> EllipticElement:
    u._check(v)
    parts: Dict[Part, LaurentPoly] = {}
    for (a1, b1, e1), p in u._parts.items():
        for (a2, b2, e2), q in v._parts.items():
            a, b, e = a1 + a2, b1 + b2, e1 + e2
            poly = p * q * _reduction_factor(u.ksq, a, b, e)
            key = (a % 2, b % 2, e % 2)
            parts[key] = parts[key] + poly if key in parts else poly
    return EllipticElement(u.ksq, parts)


def _monomial_derivative(ksq, a: int, b: int, e: int) -> EllipticElement:
    """d/dz of sn^a cn^b dn^e using sn' = cn dn, cn' = -sn dn, dn' = -k^2 sn cn"""
    result = EllipticElement.zero(ksq)
    if a:
        result = result + EllipticElement.monomial(ksq, 0, 1, 1) * EllipticElement.monomial(ksq, 0, b, e)
    if b:
        result = result - EllipticElement.monomial(ksq, 1, 0, 1) * EllipticElement.monomial(ksq, a, 0, e)
    if e:
        result = result - EllipticElement.monomial(ksq, 1, 1, 0, ksq) * EllipticElement.monomial(ksq, a, b, 0)
    return result


def ell_diff(u: EllipticElement) -> EllipticElement:
    """Exact d/dz; dx/dz = 2 sn cn dn"""
    ksq = u.ksq
    result = EllipticElement.zero(ksq)
    two_scd = EllipticElement.monomial(ksq, 1, 1, 1, 2)
    for (a, b, e), p in u._parts.items():
        monomial = EllipticElement.monomial(ksq, a, b, e)
        dp = p.derivative()
        if not dp.is_zero():
            result = result + EllipticElement.from_poly(ksq, dp) * two_scd * monomial
        if a or b or e:
            result = result + EllipticElement.from_poly(ksq, p) * _monomial_derivative(ksq, a, b, e)
    return result


class MatEllipticOp:
    """H = -d^2/dz^2 * 1 + potential, potential a Hermitian 2x2 of elements"""

    __slots__ = ("ksq", "e11", "e12", "e21", "e22")

    def __init__(self, e11: EllipticElement, e12: EllipticElement,
                 e21: EllipticElement, e22: EllipticElement):
        moduli = {e11.ksq, e12.ksq, e21.ksq, e22.ksq}
        if len(moduli) != 1:
            raise ModulusMismatchError("Potential entries carry different k^2")
        if e12 != e21:
            raise ModelError("Elliptic potential must be Hermitian (e12 == e21)")
        self.ksq = e11.ksq
        self.e11, self.e12, self.e21, self.e22 = e11, e12, e21, e22

    def entries(self):
        return self.e11, self.e12, self.e21, self.e22

    def is_block_diagonal(self) -> bool:
        return self.e12.is_zero()

    def potential_at(self, z):
        """Float potential entries on a grid of z values"""
        sn, cn, dn = jacobi_eval(z, float(self.ksq))
        return tuple(entry.evaluate(sn, cn, dn) for entry in self.entries())

    def to_dict(self):
        return {"ksq": format_scalar(self.ksq),
                "potential": {name: entry.to_dict()["parts"]
                              for name, entry in zip(("e11", "e12", "e21", "e22"), self.entries())}}


def apply_elliptic(H: MatEllipticOp, psi: Tuple[EllipticElement, EllipticElement]):
    """(-psi'' + M psi) computed in the algebra"""
    top, bottom = psi
    for component in (top, bottom):
        if component.ksq != H.ksq:
            raise ModulusMismatchError(f"Modulus mismatch: operator k^2 = {H.ksq}, vector k^2 = {component.ksq}")
    new_top = -ell_diff(ell_diff(top)) + H.e11 * top + H.e12 * bottom
    new_bottom = -ell_diff(ell_diff(bottom)) + H.e21 * top + H.e22 * bottom
    return new_top, new_bottom


# float evaluator

def _check_modulus(ksq: float):
    if not 0.0 <= ksq < 1.0:
        raise ValueError(f"Modulus k^2 = {ksq} outside [0, 1)")


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean"""
    for _ in range(MAX_LANDEN_LEVELS):
        if abs(a - b) <= 1e-15 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def agm_complete_K(ksq: float) -> float:
    """Complete elliptic integral of the first kind K(k^2)"""
    ksq = float(ksq)
    _check_modulus(ksq)
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - ksq)))


def _landen_ladder(ksq: float):
    a, b, c = 1.0, math.sqrt(1.0 - ksq), math.sqrt(ksq)
    a_list, c_list = [a], [c]
    while abs(c) > 1e-16 * a and len(a_list) < MAX_LANDEN_LEVELS:
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        a_list.append(a)
        c_list.append(c)
    return a_list, c_list


def jacobi_eval(z, ksq: float):
    """sn, cn, dn by the descending Landen / AGM backward recurrence.

    ``z`` may be a float or a numpy array; the result has the same shape.
    """
    ksq = float(ksq)
    _check_modulus(ksq)
    z = np.asarray(z, dtype=float)
    a_list, c_list = _landen_ladder(ksq)
    levels = len(a_list) - 1
    phi = (2.0 ** levels) * a_list[levels] * z
    for n in range(levels, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c_list[n] / a_list[n] * np.sin(phi)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - ksq * sn * sn)
    if sn.ndim == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


def evaluate_pair(pair: Iterable[EllipticElement], z):
    """Evaluate a pair of elements sharing k^2 at z"""
    pair = tuple(pair)
    sn, cn, dn = jacobi_eval(z, float(pair[0].ksq))
    return tuple(element.evaluate(sn, cn, dn) for element in pair)

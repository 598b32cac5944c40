"""Matrix differential operators with Laurent-polynomial coefficients and the
three exact transformation engines: gauge conjugation, pushforward under the
square map, and conjugation by a triangular mixer."""
import logging
import math
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from src.core.errors import ParityViolationError, VariableMismatchError
from src.core.exactfield import format_scalar, normalize
from src.core.polyalg import LaurentPoly, PolyMat2, PolyVec2, parity_split

logger = logging.getLogger(__name__)

ENTRY_NAMES = ("e11", "e12", "e21", "e22")


class DiffOp:
    """Scalar operator sum_i c_i(var) D^i"""

    __slots__ = ("var", "_terms")

    def __init__(self, var: str, terms: Optional[Dict[int, LaurentPoly]] = None):
        self.var = var
        cleaned = {}
        for order, coeff in (terms or {}).items():
            if not isinstance(coeff, LaurentPoly):
                coeff = LaurentPoly.constant(var, coeff)
            if coeff.var != var:
                raise VariableMismatchError(f"Coefficient in {coeff.var} for operator in {var}")
            if not coeff.is_zero():
                cleaned[int(order)] = coeff
        self._terms = cleaned

    @classmethod
    def zero(cls, var: str) -> "DiffOp":
        return cls(var)

    @classmethod
    def identity(cls, var: str) -> "DiffOp":
        return cls(var, {0: LaurentPoly.constant(var, 1)})

    @classmethod
    def derivative(cls, var: str, order: int = 1, c=1) -> "DiffOp":
        return cls(var, {order: LaurentPoly.constant(var, c)})

    @classmethod
    def multiplication(cls, p: LaurentPoly) -> "DiffOp":
        return cls(p.var, {0: p})

    @property
    def order(self) -> int:
        return max(self._terms) if self._terms else -1

    def coefficient(self, order: int) -> LaurentPoly:
        return self._terms.get(order, LaurentPoly.zero(self.var))

    def items(self):
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def _check(self, other):
        if other.var != self.var:
            raise VariableMismatchError(f"Variable mismatch: {self.var} vs {other.var}")

    def apply(self, f: LaurentPoly) -> LaurentPoly:
        if f.var != self.var:
            raise VariableMismatchError(f"Operator in {self.var} applied to polynomial in {f.var}")
        result = LaurentPoly.zero(self.var)
        derived = f
        for order in range(self.order + 1):
            if order in self._terms:
                result = result + self._terms[order] * derived
            derived = derived.derivative()
        return result

    def __add__(self, other: "DiffOp") -> "DiffOp":
        self._check(other)
        terms = dict(self._terms)
        for order, c in other._terms.items():
            terms[order] = terms[order] + c if order in terms else c
        return DiffOp(self.var, terms)

    def __neg__(self):
        return DiffOp(self.var, {o: -c for o, c in self._terms.items()})

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def scale(self, c) -> "DiffOp":
        return DiffOp(self.var, {o: p * c for o, p in self._terms.items()})

    def left_multiply(self, p: LaurentPoly) -> "DiffOp":
        return DiffOp(self.var, {o: p * c for o, c in self._terms.items()})

    def compose(self, other: "DiffOp") -> "DiffOp":
        """(self o other) by Leibniz: D^i o b = sum_l C(i,l) b^(l) D^(i-l)"""
        self._check(other)
        terms: Dict[int, LaurentPoly] = {}
        for i, a in self._terms.items():
            for j, b in other._terms.items():
                derived = b
                for l in range(i + 1):
                    if derived.is_zero():
                        break
                    order = i - l + j
                    piece = a * derived * math.comb(i, l)
                    terms[order] = terms[order] + piece if order in terms else piece
                    derived = derived.derivative()
        return DiffOp(self.var, terms)

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.var == other.var and self._terms == other._terms

    def __hash__(self):
        return hash((self.var, frozenset(self._terms.items())))

    def __str__(self):
        if not self._terms:
            return "0"
        return " + ".join(f"({c})*D^{o}" if o else f"({c})" for o, c in sorted(self._terms.items(), reverse=True))

    __repr__ = __str__

    def to_dict(self) -> Dict[str, Dict[str, object]]:
        return {str(order): {str(e): format_scalar(c) for e, c in coeff.items()}
                for order, coeff in self.items()}


class MatDiffOp2:
    """2x2 matrix of DiffOp entries in one variable"""

    __slots__ = ("e11", "e12", "e21", "e22")

    def __init__(self, e11: DiffOp, e12: DiffOp, e21: DiffOp, e22: DiffOp):
        if len({e11.var, e12.var, e21.var, e22.var}) != 1:
            raise VariableMismatchError("MatDiffOp2 entries must share one variable")
        self.e11, self.e12, self.e21, self.e22 = e11, e12, e21, e22

    @property
    def var(self) -> str:
        return self.e11.var

    @property
    def order(self) -> int:
        return max(e.order for e in self.entries())

    def entries(self) -> Tuple[DiffOp, DiffOp, DiffOp, DiffOp]:
        return self.e11, self.e12, self.e21, self.e22

    @classmethod
    def diagonal(cls, a: DiffOp, b: Optional[DiffOp] = None) -> "MatDiffOp2":
        b = a if b is None else b
        zero = DiffOp.zero(a.var)
        return cls(a, zero, zero, b)

    @classmethod
    def identity(cls, var: str) -> "MatDiffOp2":
        return cls.diagonal(DiffOp.identity(var))

    @classmethod
    def from_potential(cls, kinetic: DiffOp, potential: PolyMat2) -> "MatDiffOp2":
        """kinetic*1 + potential"""
        return cls(kinetic + DiffOp.multiplication(potential.e11),
                   DiffOp.multiplication(potential.e12),
                   DiffOp.multiplication(potential.e21),
                   kinetic + DiffOp.multiplication(potential.e22))

    def map_entries(self, fn) -> "MatDiffOp2":
        return MatDiffOp2(*(fn(e) for e in self.entries()))

    def apply(self, v: PolyVec2) -> PolyVec2:
        if v.var != self.var:
            raise VariableMismatchError(f"Operator in {self.var} applied to vector in {v.var}")
        return PolyVec2(self.e11.apply(v.top) + self.e12.apply(v.bottom),
                        self.e21.apply(v.top) + self.e22.apply(v.bottom))

    def compose(self, other: "MatDiffOp2") -> "MatDiffOp2":
        a, b = self, other
        return MatDiffOp2(a.e11.compose(b.e11) + a.e12.compose(b.e21),
                          a.e11.compose(b.e12) + a.e12.compose(b.e22),
                          a.e21.compose(b.e11) + a.e22.compose(b.e21),
                          a.e21.compose(b.e12) + a.e22.compose(b.e22))

    def __add__(self, other: "MatDiffOp2") -> "MatDiffOp2":
        return MatDiffOp2(*(x + y for x, y in zip(self.entries(), other.entries())))

    def __sub__(self, other: "MatDiffOp2") -> "MatDiffOp2":
        return MatDiffOp2(*(x - y for x, y in zip(self.entries(), other.entries())))

    def __neg__(self):
        return self.map_entries(lambda e: -e)

    def scale(self, c) -> "MatDiffOp2":
        return self.map_entries(lambda e: e.scale(c))

    def laurent_tail(self):
        """(entry, order, tail) for every coefficient with negative powers"""
        found = []
        for name, entry in zip(ENTRY_NAMES, self.entries()):
            for order, coeff in entry.items():
                tail = coeff.laurent_tail()
                if not tail.is_zero():
                    found.append((f"{name} D^{order}", tail))
        return found

    def is_block_diagonal(self) -> bool:
        return self.e12.is_zero() and self.e21.is_zero()

    def __eq__(self, other):
        if not isinstance(other, MatDiffOp2):
            return NotImplemented
        return self.entries() == other.entries()

    def __hash__(self):
        return hash(self.entries())

    def __str__(self):
        return "[[{}, {}], [{}, {}]]".format(*self.entries())

    __repr__ = __str__

    def to_dict(self):
        return {name: entry.to_dict() for name, entry in zip(ENTRY_NAMES, self.entries())}


class GaugeFactor:
    """g(var) = var^eps * exp(-W(var)) with W a polynomial without constant term"""

    __slots__ = ("eps", "W")

    def __init__(self, eps, W: LaurentPoly):
        if not W.is_polynomial():
            raise ValueError(f"Gauge exponent must be a polynomial, got {W}")
        self.eps = Fraction(eps)
        # constant shifts only rescale the eigenfunctions
        self.W = W - W.coeff(0)

    @property
    def var(self) -> str:
        return self.W.var

    def log_derivative(self) -> LaurentPoly:
        """g'/g = eps/var - W'"""
        return LaurentPoly.monomial(self.var, -1, self.eps) - self.W.derivative()

    def evaluate(self, points):
        points = np.asarray(points, dtype=float)
        if self.eps.denominator == 1:
            power = points ** int(self.eps)
        else:
            power = np.abs(points) ** float(self.eps)
        return power * np.exp(-self.W.evaluate(points))

    def to_dict(self):
        return {"eps": str(self.eps), "W": str(self.W)}

    def __eq__(self, other):
        if not isinstance(other, GaugeFactor):
            return NotImplemented
        return self.eps == other.eps and self.W == other.W

    def __hash__(self):
        return hash((self.eps, self.W))

    def __repr__(self):
        return f"GaugeFactor(eps={self.eps}, W={self.W})"


def gauge_conjugate(op: MatDiffOp2, g: GaugeFactor) -> MatDiffOp2:
    """g^-1 o op o g through the substitution D -> D + g'/g"""
    if g.var != op.var:
        raise VariableMismatchError(f"Gauge in {g.var} for operator in {op.var}")
    if op.order > 2:
        raise ValueError(f"gauge_conjugate expects order <= 2, got {op.order}")
    var = op.var
    shifted_d = DiffOp(var, {1: LaurentPoly.constant(var, 1), 0: g.log_derivative()})
    powers = [DiffOp.identity(var)]
    for _ in range(op.order):
        powers.append(powers[-1].compose(shifted_d))

    def conjugate_entry(entry: DiffOp) -> DiffOp:
        result = DiffOp.zero(var)
        for order, coeff in entry.items():
            result = result + powers[order].left_multiply(coeff)
        return result

    return op.map_entries(conjugate_entry)


def _even_chain_rule(max_order: int, var: str):
    """D_y^i on u(y^2) as sum_l q_il(y) D_x^l, for i = 0..max_order"""
    table = [{0: LaurentPoly.constant(var, 1)}]
    two_y = LaurentPoly.monomial(var, 1, 2)
    for _ in range(max_order):
        previous = table[-1]
        nxt: Dict[int, LaurentPoly] = {}
        for l, q in previous.items():
            dq = q.derivative()
            if not dq.is_zero():
                nxt[l] = nxt[l] + dq if l in nxt else dq
            piece = q * two_y
            nxt[l + 1] = nxt[l + 1] + piece if l + 1 in nxt else piece
        table.append(nxt)
    return table


def pushforward_even(op: MatDiffOp2, target_var: str = "x") -> MatDiffOp2:
    """Rewrite an even-to-even operator in y as an operator in x = y^2"""
    chain = _even_chain_rule(max(op.order, 0), op.var)

    def push_entry(name: str, entry: DiffOp) -> DiffOp:
        collected: Dict[int, LaurentPoly] = {}
        for order, coeff in entry.items():
            for l, q in chain[order].items():
                piece = coeff * q
                collected[l] = collected[l] + piece if l in collected else piece
        terms = {}
        for l, total in collected.items():
            even, odd = parity_split(total, target_var)
            if not odd.is_zero():
                raise ParityViolationError(name, l, odd)
            terms[l] = even
        return DiffOp(target_var, terms)

    return MatDiffOp2(*(push_entry(name, e) for name, e in zip(ENTRY_NAMES, op.entries())))


class MixerSpec:
    """Unit triangular P with off-diagonal kappa0*D + kappa1 + kappa2*x*D + kappa3*x"""

    __slots__ = ("orientation", "kappa")

    def __init__(self, orientation: str = "upper", kappa=(0, 0, 0, 0)):
        if orientation not in ("upper", "lower"):
            raise ValueError(f"Mixer orientation must be 'upper' or 'lower', got {orientation!r}")
        kappa = tuple(normalize(k) for k in kappa)
        if len(kappa) != 4:
            raise ValueError("Mixer needs four coefficients kappa0..kappa3")
        self.orientation = orientation
        self.kappa = kappa

    @classmethod
    def identity(cls) -> "MixerSpec":
        return cls("upper", (0, 0, 0, 0))

    def is_identity(self) -> bool:
        return all(k == 0 for k in self.kappa)

    def with_kappa(self, index: int, value) -> "MixerSpec":
        kappa = list(self.kappa)
        kappa[index] = value
        return MixerSpec(self.orientation, kappa)

    def off_diagonal(self, var: str) -> DiffOp:
        k0, k1, k2, k3 = self.kappa
        return DiffOp(var, {
            1: LaurentPoly(var, {0: k0, 1: k2}),
            0: LaurentPoly(var, {0: k1, 1: k3}),
        })

    def _triangular(self, var: str, sign: int) -> MatDiffOp2:
        one = DiffOp.identity(var)
        zero = DiffOp.zero(var)
        n = self.off_diagonal(var).scale(sign)
        if self.orientation == "upper":
            return MatDiffOp2(one, n, zero, one)
        return MatDiffOp2(one, zero, n, one)

    def to_operator(self, var: str) -> MatDiffOp2:
        return self._triangular(var, 1)

    def inverse_operator(self, var: str) -> MatDiffOp2:
        # N^2 = 0, so (1 + N)^-1 = 1 - N
        return self._triangular(var, -1)

    def apply(self, v: PolyVec2) -> PolyVec2:
        return self.to_operator(v.var).apply(v)

    def to_dict(self):
        return {"orientation": self.orientation, "kappa": [format_scalar(k) for k in self.kappa]}

    def __eq__(self, other):
        if not isinstance(other, MixerSpec):
            return NotImplemented
        return self.orientation == other.orientation and self.kappa == other.kappa

    def __hash__(self):
        return hash((self.orientation, self.kappa))

    def __repr__(self):
        return f"MixerSpec({self.orientation}, kappa={[str(k) for k in self.kappa]})"


def mixer_conjugate(op: MatDiffOp2, mixer: MixerSpec) -> MatDiffOp2:
    """P^-1 o op o P"""
    if mixer.is_identity():
        return op
    return mixer.inverse_operator(op.var).compose(op).compose(mixer.to_operator(op.var))

"""Exact scalar arithmetic over Q and a single quadratic extension Q(sqrt r).

Rationals are plain ``fractions.Fraction`` values. Irrational elements are
``QuadExt`` instances; any operation whose result has a zero irrational part
collapses back to a ``Fraction`` so that equal values always have equal types.
"""
import math
from fractions import Fraction
from typing import Dict, Optional, Union

from src.core.errors import FieldError

Rational = Fraction


def rational_sqrt_check(r) -> Optional[Fraction]:
    """Return s with s*s == r when r is a rational square, else None"""
    r = Fraction(r)
    if r < 0:
        raise FieldError(f"Square root of negative value {r} requested")
    num_root = math.isqrt(r.numerator)
    den_root = math.isqrt(r.denominator)
    if num_root * num_root == r.numerator and den_root * den_root == r.denominator:
        return Fraction(num_root, den_root)
    return None


class QuadExt:
    """Element a + b*sqrt(r) with b != 0 and r not a rational square.

    Build values through ``make_quad`` or ``sqrt_element``; the constructor
    trusts its arguments to be normalized.
    """

    __slots__ = ("a", "b", "r")

    def __init__(self, a, b, r):
        object.__setattr__(self, "a", Fraction(a))
        object.__setattr__(self, "b", Fraction(b))
        object.__setattr__(self, "r", Fraction(r))

    def __setattr__(self, name, value):
        raise AttributeError("QuadExt is immutable")

    def _parts(self, other):
        if isinstance(other, QuadExt):
            if other.r != self.r:
                raise FieldError(f"Radicand mismatch: {self.r} vs {other.r}")
            return other.a, other.b
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other):
        if isinstance(other, float):
            return float(self) + other
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        return make_quad(self.a + parts[0], self.b + parts[1], self.r)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.r)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, float):
            return float(self) - other
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        return make_quad(self.a - parts[0], self.b - parts[1], self.r)

    def __rsub__(self, other):
        if isinstance(other, float):
            return other - float(self)
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        return make_quad(parts[0] - self.a, parts[1] - self.b, self.r)

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        c, d = parts
        return make_quad(self.a * c + self.b * d * self.r, self.a * d + self.b * c, self.r)

    __rmul__ = __mul__

    def inverse(self):
        norm = self.norm()
        # norm vanishes only for a = b = 0 because r is not a square
        return make_quad(self.a / norm, -self.b / norm, self.r)

    def __truediv__(self, other):
        if isinstance(other, float):
            return float(self) / other
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        if parts[1] == 0:
            if parts[0] == 0:
                raise ZeroDivisionError("QuadExt division by zero")
            return make_quad(self.a / parts[0], self.b / parts[0], self.r)
        return self * QuadExt(parts[0], parts[1], self.r).inverse()

    def __rtruediv__(self, other):
        if isinstance(other, float):
            return other / float(self)
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        return make_quad(parts[0], parts[1], self.r) * self.inverse()

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            return NotImplemented
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = Fraction(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.r

    def conjugate(self):
        return QuadExt(self.a, -self.b, self.r)

    def __eq__(self, other):
        if isinstance(other, QuadExt):
            return self.a == other.a and self.b == other.b and self.r == other.r
        if isinstance(other, (int, Fraction)):
            # normalized QuadExt values are never rational
            return False
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.r))

    def __bool__(self):
        return True

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(float(self.r))

    def __repr__(self):
        return f"QuadExt({self.a}, {self.b}, r={self.r})"

    def __str__(self):
        sign = "-" if self.b < 0 else "+"
        return f"({self.a} {sign} {abs(self.b)}*sqrt({self.r}))"


ExactScalar = Union[Fraction, QuadExt]


def make_quad(a, b, r) -> ExactScalar:
    """Normalize a + b*sqrt(r) to a Fraction or a QuadExt"""
    a, b, r = Fraction(a), Fraction(b), Fraction(r)
    if b == 0:
        return a
    root = rational_sqrt_check(r)
    if root is not None:
        return a + b * root
    return QuadExt(a, b, r)


def sqrt_element(r) -> ExactScalar:
    """sqrt(r) inside Q or Q(sqrt r)"""
    r = Fraction(r)
    root = rational_sqrt_check(r)
    if root is not None:
        return root
    return QuadExt(0, 1, r)


def normalize(x) -> ExactScalar:
    """Idempotent normalization of ints, Fractions and QuadExt values"""
    if isinstance(x, QuadExt):
        return make_quad(x.a, x.b, x.r)
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    raise TypeError(f"Not an exact scalar: {x!r}")


def radicand_of(x) -> Optional[Fraction]:
    return x.r if isinstance(x, QuadExt) else None


def field_add(x, y) -> ExactScalar:
    return normalize(normalize(x) + normalize(y))


def field_sub(x, y) -> ExactScalar:
    return normalize(normalize(x) - normalize(y))


def field_mul(x, y) -> ExactScalar:
    return normalize(normalize(x) * normalize(y))


def field_inv(x) -> ExactScalar:
    x = normalize(x)
    if x == 0:
        raise ZeroDivisionError("field_inv of zero")
    if isinstance(x, QuadExt):
        return x.inverse()
    return 1 / x


def field_div(x, y) -> ExactScalar:
    return field_mul(x, field_inv(y))


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QuadExt))


def to_float(x) -> float:
    return float(x)


def parse_scalar(value) -> ExactScalar:
    """Read an exact scalar from JSON/YAML input.

    Accepts ints, "p/q" and decimal strings, Fractions, QuadExt values and
    {"a": ..., "b": ..., "r": ...} mappings. Floats are read through their
    decimal representation.
    """
    if isinstance(value, bool):
        raise ValueError(f"Boolean is not a scalar: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, QuadExt):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Cannot parse exact scalar {value!r}: {e}") from e
    if isinstance(value, dict):
        missing = {"a", "b", "r"} - set(value)
        if missing:
            raise ValueError(f"Quadratic scalar missing keys {sorted(missing)}")
        return make_quad(parse_scalar(value["a"]), parse_scalar(value["b"]), parse_scalar(value["r"]))
    raise ValueError(f"Cannot parse exact scalar {value!r}")


def format_scalar(x) -> Union[str, Dict[str, str]]:
    """JSON form: "p/q" for rationals, {"a","b","r"} for extension elements"""
    if isinstance(x, QuadExt):
        return {"a": str(x.a), "b": str(x.b), "r": str(x.r)}
    return str(Fraction(x))

"""Operator families and their candidate invariant spaces.

Four families are built here: the sextic matrix oscillator on the line, the
matrix Lame operator (two parameter cases, eight spaces), the reduced Calogero
operator in the variable tau, and the trigonometric Goldstone operator. The
generalized elliptic ansatz is kept as a checkable description.
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.diffop import (DiffOp, GaugeFactor, MatDiffOp2, MixerSpec, gauge_conjugate,
                             mixer_conjugate, pushforward_even)
from src.core.elliptic import EllipticElement, MatEllipticOp, Part, apply_elliptic
from src.core.errors import LaurentTailError, ModelError
from src.core.exactfield import (ExactScalar, field_div, format_scalar, normalize, parse_scalar,
                                 rational_sqrt_check, make_quad)
from src.core.polyalg import LaurentPoly, PolyMat2, PolyVec2
from src.core.states import Track

logger = logging.getLogger(__name__)

TRACK_POLYNOMIAL = Track.POLYNOMIAL.value
TRACK_ELLIPTIC = Track.ELLIPTIC.value


# prefactors and space descriptors

class EllipticPrefactor:
    """2x2 matrix of elliptic elements multiplying the mixed polynomial pair"""

    __slots__ = ("p11", "p12", "p21", "p22", "label")

    def __init__(self, p11: EllipticElement, p12: EllipticElement,
                 p21: EllipticElement, p22: EllipticElement, label: str = ""):
        self.p11, self.p12, self.p21, self.p22 = p11, p12, p21, p22
        self.label = label

    @property
    def ksq(self):
        return self.p11.ksq

    @classmethod
    def diagonal(cls, ksq, top: Part, bottom: Part) -> "EllipticPrefactor":
        zero = EllipticElement.zero(ksq)
        label = f"({_part_label(top)}, {_part_label(bottom)})"
        return cls(EllipticElement.monomial(ksq, *top), zero, zero,
                   EllipticElement.monomial(ksq, *bottom), label)

    @classmethod
    def rotation(cls, ksq) -> "EllipticPrefactor":
        sn, cn = EllipticElement.sn(ksq), EllipticElement.cn(ksq)
        return cls(cn, -sn, sn, cn, "[[cn, -sn], [sn, cn]]")

    def entries(self):
        return self.p11, self.p12, self.p21, self.p22

    def apply(self, vec: PolyVec2) -> Tuple[EllipticElement, EllipticElement]:
        u = EllipticElement.from_poly(self.ksq, vec.top)
        v = EllipticElement.from_poly(self.ksq, vec.bottom)
        return self.p11 * u + self.p12 * v, self.p21 * u + self.p22 * v

    def to_dict(self):
        return {"kind": "elliptic", "label": self.label,
                "matrix": [str(e) for e in self.entries()]}


def _part_label(part: Part) -> str:
    names = [n for n, flag in zip(("sn", "cn", "dn"), part) if flag]
    return "*".join(names) if names else "1"


@dataclass(frozen=True)
class SpaceDescriptor:
    """Candidate invariant space prefactor * P * (P(n) + P(m))"""

    name: str
    track: str
    degrees: Tuple[int, int]
    mixer: MixerSpec
    prefactor: object = None
    var: str = "x"
    model: str = ""

    @property
    def dimension(self) -> int:
        n, m = self.degrees
        return max(n, -1) + max(m, -1) + 2

    def is_applicable(self) -> bool:
        n, m = self.degrees
        return n >= -1 and m >= -1 and self.dimension >= 1

    def coordinates(self) -> List[Tuple[str, int]]:
        """Basis order: top degrees 0..n, then bottom degrees 0..m"""
        n, m = self.degrees
        return [("top", j) for j in range(n + 1)] + [("bottom", j) for j in range(m + 1)]

    def coordinate_vector(self, slot: str, j: int) -> PolyVec2:
        mono = LaurentPoly.monomial(self.var, j)
        zero = LaurentPoly.zero(self.var)
        return PolyVec2(mono, zero) if slot == "top" else PolyVec2(zero, mono)

    def to_dict(self):
        if self.prefactor is None:
            prefactor = None
        elif isinstance(self.prefactor, GaugeFactor):
            prefactor = {"kind": "gauge", **self.prefactor.to_dict()}
        else:
            prefactor = self.prefactor.to_dict()
        return {"name": self.name, "track": self.track, "model": self.model,
                "degrees": list(self.degrees), "dimension": self.dimension,
                "var": self.var, "mixer": self.mixer.to_dict(), "prefactor": prefactor}


# sextic family

@dataclass(frozen=True)
class SexticParams:
    p1: Fraction
    p2: Fraction
    kappa0: Fraction
    m: int
    eps: Fraction = Fraction(0)
    kappa1: Fraction = Fraction(0)
    kappa2: Fraction = Fraction(0)
    kappa3: Fraction = Fraction(0)
    degrees: Optional[Tuple[int, int]] = None
    perturb: Dict[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("p1", "p2", "kappa0", "eps", "kappa1", "kappa2", "kappa3"):
            object.__setattr__(self, name, normalize(parse_scalar(getattr(self, name))))
        if int(self.m) != self.m:
            raise ModelError(f"Sextic m must be an integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if self.m < 2:
            raise ModelError(f"Sextic family needs m >= 2, got m = {self.m}")
        if self.degrees is not None:
            object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        for key in self.perturb:
            _parse_sextic_key(key)
        object.__setattr__(self, "perturb", {k: parse_scalar(v) for k, v in self.perturb.items()})

    @property
    def n(self) -> int:
        return self.m - 2

    @property
    def space_degrees(self) -> Tuple[int, int]:
        return self.degrees if self.degrees is not None else (self.n, self.m)

    @property
    def mixer(self) -> MixerSpec:
        return MixerSpec("upper", (self.kappa0, self.kappa1, self.kappa2, self.kappa3))

    def replace(self, **changes) -> "SexticParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = {"model": "sextic", "p1": format_scalar(self.p1), "p2": format_scalar(self.p2),
               "kappa0": format_scalar(self.kappa0), "m": self.m, "eps": format_scalar(self.eps)}
        for name in ("kappa1", "kappa2", "kappa3"):
            if getattr(self, name) != 0:
                out[name] = format_scalar(getattr(self, name))
        if self.degrees is not None:
            out["degrees"] = list(self.degrees)
        if self.perturb:
            out["perturb"] = {k: format_scalar(v) for k, v in sorted(self.perturb.items())}
        return out


def _sextic_parts(params: SexticParams, var: str) -> Dict[str, LaurentPoly]:
    p1, p2, m, eps = params.p1, params.p2, params.m, params.eps
    s0 = LaurentPoly(var, {
        6: 4 * p2 * p2,
        4: 8 * p1 * p2,
        2: 4 * p1 * p1 - 8 * m * p2 + 2 * (1 - 2 * eps) * p2,
        -2: eps * (eps - 1),
    })
    s1 = LaurentPoly.constant(var, -8 * m * p2 * params.kappa0)
    s3 = LaurentPoly(var, {2: 8 * p2, 0: 4 * p1})
    return {"s0": s0, "s1": s1, "s3": s3}


def sextic_potential(params: SexticParams, var: str = "y") -> PolyMat2:
    """The matrix potential M6(y), including eps(eps-1)/y^2 when eps is not 0 or 1"""
    parts = _sextic_parts(params, var)
    for key, shift in params.perturb.items():
        component, power = _parse_sextic_key(key)
        parts[component] = parts[component] + LaurentPoly(var, {power: shift})
    return PolyMat2.pauli(parts["s0"], parts["s1"], parts["s3"])


def sextic_coefficient_keys(params: SexticParams) -> List[str]:
    """Perturbation keys of the nonzero coefficients of M6 = s0 + s1 sigma1 + s3 sigma3"""
    return [f"{name}:y^{power}" for name, poly in _sextic_parts(params, "y").items()
            for power, _ in reversed(poly.items())]


def _parse_sextic_key(key: str) -> Tuple[str, int]:
    component, sep, power = key.partition(":y^")
    if not sep or component not in ("s0", "s1", "s3"):
        raise ModelError(f"Sextic perturbation key must look like 's0:y^6', got {key!r}")
    try:
        return component, int(power)
    except ValueError:
        raise ModelError(f"Sextic perturbation key {key!r} has a non-integer power") from None


def sextic_gauge(params: SexticParams, var: str = "y") -> GaugeFactor:
    """y^eps * exp(-(p2/2) y^4 - p1 y^2)"""
    return GaugeFactor(params.eps, LaurentPoly(var, {4: params.p2 / 2, 2: params.p1}))


def build_sextic(params: SexticParams) -> Tuple[MatDiffOp2, SpaceDescriptor]:
    if params.p2 <= 0:
        logger.warning(f"Warning: p2 = {params.p2} <= 0, the sextic spectrum is not normalizable")
    kinetic = DiffOp.derivative("y", 2, -1)
    op = MatDiffOp2.from_potential(kinetic, sextic_potential(params))
    space = SpaceDescriptor(name="sextic", track=TRACK_POLYNOMIAL, degrees=params.space_degrees,
                            mixer=params.mixer, prefactor=sextic_gauge(params), var="x",
                            model="sextic")
    return op, space


def _require_polynomial(op: MatDiffOp2, what: str):
    tail = op.laurent_tail()
    if tail:
        logger.debug(f"{what}: Laurent tail {tail}")
        raise LaurentTailError(tail)


def build_sextic_pushed(params: SexticParams) -> MatDiffOp2:
    """Gauge-conjugated operator pushed forward to x = y^2, mixer not applied"""
    op, space = build_sextic(params)
    gauged = gauge_conjugate(op, space.prefactor)
    pushed = pushforward_even(gauged, "x")
    _require_polynomial(pushed, "sextic pushforward")
    return pushed


def build_sextic_gauged(params: SexticParams) -> MatDiffOp2:
    pushed = build_sextic_pushed(params)
    return mixer_conjugate(pushed, params.mixer)


# Lame family

@dataclass(frozen=True)
class LameSpaceSpec:
    """Catalogue row; rho = kappa * (2 theta k) is fixed by leading-degree balance"""

    name: str
    case: int
    top: Part
    bottom: Part
    orientation: str
    x_mixer: bool
    degree_offsets: Tuple[int, int]
    kappa_sq_formula: str
    rho_sign: int
    rho_has_ksq: bool
    rho_delta_sign: int

    @property
    def dimension_formula(self) -> str:
        total = sum(self.degree_offsets) + 2
        return f"2m{total:+d}" if total else "2m"

    def degrees(self, m: int) -> Tuple[int, int]:
        return m + self.degree_offsets[0], m + self.degree_offsets[1]

    def prefactor_label(self) -> str:
        return f"({_part_label(self.top)}, {_part_label(self.bottom)})"

    def mixer_label(self) -> str:
        return f"{self.orientation} kappa{'*x' if self.x_mixer else ''}"


LAME_CATALOG = (
    LameSpaceSpec("V1", 1, (0, 0, 0), (0, 1, 1), "upper", True, (0, 0), "k^2*R1", 1, True, -1),
    LameSpaceSpec("V2", 1, (0, 1, 1), (0, 0, 0), "lower", True, (0, 0), "k^2/R1", 1, True, 1),
    LameSpaceSpec("V3", 1, (1, 1, 0), (1, 0, 1), "upper", False, (-1, 0), "k^2*R1", -1, True, -1),
    LameSpaceSpec("V4", 1, (1, 0, 1), (1, 1, 0), "upper", False, (-1, 0), "R1/k^2", -1, False, -1),
    LameSpaceSpec("V5", 2, (0, 1, 0), (0, 0, 1), "upper", False, (-1, 0), "k^2*R2", -1, True, -1),
    LameSpaceSpec("V6", 2, (0, 0, 1), (0, 1, 0), "upper", False, (-1, 0), "R2/k^2", -1, False, -1),
    LameSpaceSpec("V7", 2, (1, 0, 0), (1, 1, 1), "upper", True, (-1, -1), "k^2*R2", 1, True, -1),
    LameSpaceSpec("V8", 2, (1, 1, 1), (1, 0, 0), "lower", True, (-1, -1), "k^2/R2", 1, True, 1),
)

LAME_SPACES = {spec.name: spec for spec in LAME_CATALOG}

PERTURB_KEYS = ("A", "C", "theta_k", "kappa", "delta_shift")


@dataclass(frozen=True)
class LameParams:
    case: int
    m: int
    delta: Fraction
    ksq: Fraction
    space: Optional[str] = None
    kappa_sign: int = 1
    perturb: Dict[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in (1, 2):
            raise ModelError(f"Lame case must be 1 or 2, got {self.case}")
        if int(self.m) != self.m or self.m < 0:
            raise ModelError(f"Lame m must be a non-negative integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "delta", Fraction(parse_scalar(self.delta)))
        object.__setattr__(self, "ksq", Fraction(parse_scalar(self.ksq)))
        if not 0 <= self.ksq < 1:
            raise ModelError(f"Modulus k^2 = {self.ksq} outside [0, 1)")
        if abs(self.delta) > self.sigma:
            raise ModelError(f"|delta| = {abs(self.delta)} exceeds {self.sigma}: theta is not real")
        if self.kappa_sign not in (1, -1):
            raise ModelError(f"kappa_sign must be +1 or -1, got {self.kappa_sign}")
        unknown = set(self.perturb) - set(PERTURB_KEYS)
        if unknown:
            raise ModelError(f"Unknown perturbation keys {sorted(unknown)}")
        object.__setattr__(self, "perturb", {k: parse_scalar(v) for k, v in self.perturb.items()})
        if self.space is None:
            object.__setattr__(self, "space", "V1" if self.case == 1 else "V5")
        spec = LAME_SPACES.get(self.space)
        if spec is None or spec.case != self.case:
            raise ModelError(f"Space {self.space!r} does not belong to Lame case {self.case}")

    @property
    def sigma(self) -> int:
        """4m+3 in case 1, 4m+1 in case 2"""
        return 4 * self.m + (3 if self.case == 1 else 1)

    @property
    def A(self) -> Fraction:
        return self._diagonal_base - self.delta

    @property
    def C(self) -> Fraction:
        return self._diagonal_base + self.delta

    @property
    def _diagonal_base(self) -> Fraction:
        m = self.m
        return Fraction(4 * m * m + 6 * m + 3) if self.case == 1 else Fraction(4 * m * m + 2 * m + 1)

    @property
    def two_theta_sq(self) -> Fraction:
        return Fraction(self.sigma ** 2) - self.delta ** 2

    @property
    def two_theta_k_sq(self) -> Fraction:
        return self.ksq * self.two_theta_sq

    @property
    def R(self) -> Optional[Fraction]:
        if self.sigma + self.delta == 0:
            return None
        return (self.sigma - self.delta) / (self.sigma + self.delta)

    @property
    def decoupled(self) -> bool:
        return self.two_theta_sq == 0

    def rho(self, spec: LameSpaceSpec) -> Fraction:
        value = Fraction(self.sigma) + spec.rho_delta_sign * self.delta
        if spec.rho_has_ksq:
            value = value * self.ksq
        return spec.rho_sign * value

    def kappa_sq(self, spec: LameSpaceSpec) -> Optional[Fraction]:
        """Catalogue value of kappa^2, None where the formula is undefined"""
        R = self.R
        formula = spec.kappa_sq_formula
        if formula.startswith("k^2*"):
            return None if R is None else self.ksq * R
        if formula.startswith("k^2/"):
            return None if not R else self.ksq / R
        return None if R is None or self.ksq == 0 else R / self.ksq

    def replace(self, **changes) -> "LameParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = {"model": "lame", "case": self.case, "m": self.m,
               "delta": format_scalar(self.delta), "ksq": format_scalar(self.ksq),
               "space": self.space}
        if self.kappa_sign != 1:
            out["kappa_sign"] = self.kappa_sign
        if self.perturb:
            out["perturb"] = {k: format_scalar(v) for k, v in sorted(self.perturb.items())}
        return out


@dataclass
class FieldPlan:
    """Outcome of the rationality analysis for kappa and 2 theta k"""

    rational: bool
    radicand: Optional[Fraction]
    two_theta_k: Optional[ExactScalar]
    kappa: Dict[str, Optional[ExactScalar]]
    messages: List[str] = field(default_factory=list)

    def to_dict(self):
        return {"rational": self.rational,
                "radicand": None if self.radicand is None else str(self.radicand),
                "two_theta_k": None if self.two_theta_k is None else format_scalar(self.two_theta_k),
                "kappa": {k: None if v is None else format_scalar(v) for k, v in self.kappa.items()},
                "messages": list(self.messages)}


def lame_field_analysis(params: LameParams) -> FieldPlan:
    """Pick Q or a single Q(sqrt r) holding 2 theta k and every kappa of the case.

    kappa * (2 theta k) = rho is rational for each space, so once 2 theta k lives
    in Q(sqrt r) every kappa does too.
    """
    specs = [s for s in LAME_CATALOG if s.case == params.case]
    g_sq = params.two_theta_k_sq
    messages: List[str] = []
    kappas: Dict[str, Optional[ExactScalar]] = {}

    if g_sq == 0:
        for spec in specs:
            rho = params.rho(spec)
            if rho == 0:
                kappas[spec.name] = Fraction(0)
            else:
                kappas[spec.name] = None
                messages.append(f"{spec.name}: 2*theta*k = 0 but kappa*2*theta*k = {rho} is required")
        return FieldPlan(True, None, Fraction(0), kappas, messages)

    root = rational_sqrt_check(g_sq)
    radicand = None
    if root is not None:
        two_theta_k: ExactScalar = root
    else:
        requested = LAME_SPACES[params.space]
        reference = params.kappa_sq(requested)
        candidate = reference if reference else g_sq
        # candidate and g_sq share a square class, so the ratio is a rational square
        ratio_root = rational_sqrt_check(g_sq / candidate)
        if ratio_root is None:
            candidate = g_sq
            ratio_root = Fraction(1)
            messages.append(f"kappa^2 = {reference} and (2*theta*k)^2 = {g_sq} lie in different square classes")
        radicand = candidate
        two_theta_k = make_quad(0, ratio_root, radicand)

    for spec in specs:
        rho = params.rho(spec)
        kappa = field_div(rho * params.kappa_sign, two_theta_k)
        expected = params.kappa_sq(spec)
        if expected is None:
            kappas[spec.name] = None
            messages.append(f"{spec.name}: kappa^2 = {spec.kappa_sq_formula} is undefined here")
            continue
        if normalize(kappa * kappa) != expected:
            messages.append(f"{spec.name}: kappa^2 = {normalize(kappa * kappa)} differs from {expected}")
        kappas[spec.name] = kappa
    return FieldPlan(radicand is None, radicand, two_theta_k, kappas, messages)


def lame_potential(params: LameParams, two_theta_k: ExactScalar) -> MatEllipticOp:
    ksq = params.ksq
    A = params.A + params.perturb.get("A", 0)
    C = params.C + params.perturb.get("C", 0)
    delta = params.delta + params.perturb.get("delta_shift", 0)
    g = normalize(two_theta_k + params.perturb.get("theta_k", 0))
    shift = delta * (1 + ksq) / 2
    x = LaurentPoly.monomial("x", 1)
    e11 = EllipticElement.from_poly(ksq, x * (A * ksq) + shift)
    e22 = EllipticElement.from_poly(ksq, x * (C * ksq) - shift)
    off = EllipticElement.monomial(ksq, 0, 1, 1, g)
    return MatEllipticOp(e11, off, off, e22)


def lame_space(params: LameParams, spec: LameSpaceSpec, kappa: ExactScalar) -> SpaceDescriptor:
    kappa = normalize(kappa + params.perturb.get("kappa", 0))
    coefficients = (0, 0, 0, kappa) if spec.x_mixer else (0, kappa, 0, 0)
    return SpaceDescriptor(name=spec.name, track=TRACK_ELLIPTIC, degrees=spec.degrees(params.m),
                           mixer=MixerSpec(spec.orientation, coefficients),
                           prefactor=EllipticPrefactor.diagonal(params.ksq, spec.top, spec.bottom),
                           var="x", model="lame")


def lame_space_status(params: LameParams, plan: Optional[FieldPlan] = None) -> Dict[str, Optional[str]]:
    """Rejection reason per space of the case, None when the space is applicable"""
    plan = plan or lame_field_analysis(params)
    status = {}
    for spec in LAME_CATALOG:
        if spec.case != params.case:
            continue
        n, m = spec.degrees(params.m)
        if n < -1 or m < -1 or n + m + 2 < 1:
            status[spec.name] = f"degrees ({n}, {m}) leave no space"
        elif plan.kappa.get(spec.name) is None:
            status[spec.name] = f"kappa undefined ({spec.kappa_sq_formula})"
        else:
            status[spec.name] = None
    return status


def build_lame(params: LameParams) -> Tuple[MatEllipticOp, List[SpaceDescriptor]]:
    """Potential and the applicable spaces of the parameter case"""
    plan = lame_field_analysis(params)
    if params.decoupled:
        logger.warning("Warning: theta = 0, the Lame system decouples into two scalar equations")
    op = lame_potential(params, plan.two_theta_k)
    spaces = []
    for name, reason in lame_space_status(params, plan).items():
        if reason is not None:
            logger.info(f"Space {name} rejected: {reason}")
            continue
        spaces.append(lame_space(params, LAME_SPACES[name], plan.kappa[name]))
    return op, spaces


def select_space(spaces: List[SpaceDescriptor], name: str) -> SpaceDescriptor:
    for space in spaces:
        if space.name == name:
            return space
    raise ModelError(f"Space {name} is not applicable for these parameters")


# Goldstone family (k^2 = 0)

@dataclass(frozen=True)
class GoldstoneParams:
    coupling: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coupling", Fraction(parse_scalar(self.coupling)))

    def to_dict(self):
        return {"model": "goldstone", "coupling": format_scalar(self.coupling)}


def build_goldstone(coupling) -> MatEllipticOp:
    c = Fraction(parse_scalar(coupling))
    ksq = Fraction(0)
    x = LaurentPoly.monomial("x", 1)
    e11 = EllipticElement.from_poly(ksq, (1 - x) * c)
    e22 = EllipticElement.from_poly(ksq, x * c)
    off = EllipticElement.monomial(ksq, 1, 1, 0, c)
    return MatEllipticOp(e11, off, off, e22)


def goldstone_space(coupling=None) -> SpaceDescriptor:
    """Rotation of the constant pair; eigenvalues 1 + c and 1"""
    return SpaceDescriptor(name="G0", track=TRACK_ELLIPTIC, degrees=(0, 0),
                           mixer=MixerSpec.identity(), prefactor=EllipticPrefactor.rotation(Fraction(0)),
                           var="x", model="goldstone")


# generalized elliptic ansatz

@dataclass(frozen=True)
class GeneralizedLameAnsatz:
    V1: LaurentPoly
    V2: LaurentPoly
    theta: ExactScalar
    alpha: Tuple[int, int, int]
    beta: Tuple[int, int, int]
    gamma: Tuple[int, int, int]


def admissibility_check(ansatz: GeneralizedLameAnsatz) -> Tuple[bool, List[str]]:
    problems = []
    for j in range(3):
        b, g, a = ansatz.beta[j], ansatz.gamma[j], ansatz.alpha[j]
        if b not in (0, 1):
            problems.append(f"beta[{j + 1}] = {b} not in {{0, 1}}")
        if g not in (0, 1):
            problems.append(f"gamma[{j + 1}] = {g} not in {{0, 1}}")
        if a < 0:
            problems.append(f"alpha[{j + 1}] = {a} is negative")
        for sign, label in ((1, "+"), (-1, "-")):
            value = a + sign * (b - g)
            if value < 0 or value % 2:
                problems.append(f"alpha[{j + 1}] {label} (beta - gamma) = {value} is not a non-negative even integer")
    return not problems, problems


def build_generalized(ansatz: GeneralizedLameAnsatz, ksq) -> MatEllipticOp:
    ksq = Fraction(parse_scalar(ksq))
    off = EllipticElement.power_product(ksq, *ansatz.alpha) * ansatz.theta
    return MatEllipticOp(EllipticElement.from_poly(ksq, ansatz.V1), off, off,
                         EllipticElement.from_poly(ksq, ansatz.V2))


def ansatz_similarity(ansatz: GeneralizedLameAnsatz, ksq) -> EllipticPrefactor:
    return EllipticPrefactor.diagonal(Fraction(parse_scalar(ksq)), tuple(ansatz.beta), tuple(ansatz.gamma))


def ansatz_polynomial_probe(ansatz: GeneralizedLameAnsatz, ksq, degree: int = 2) -> bool:
    """Check U^-1 H U maps polynomial pairs up to ``degree`` to polynomial pairs"""
    ksq = Fraction(parse_scalar(ksq))
    H = build_generalized(ansatz, ksq)
    U = ansatz_similarity(ansatz, ksq)
    top_part, bottom_part = tuple(ansatz.beta), tuple(ansatz.gamma)
    zero = LaurentPoly.zero("x")
    for j in range(degree + 1):
        mono = LaurentPoly.monomial("x", j)
        for vec in (PolyVec2(mono, zero), PolyVec2(zero, mono)):
            top, bottom = apply_elliptic(H, U.apply(vec))
            for element, allowed in ((top, top_part), (bottom, bottom_part)):
                for part, poly in element.parts():
                    if part != allowed or not poly.is_polynomial():
                        logger.debug(f"Probe failed at degree {j}: part {part} -> {poly}")
                        return False
    return True


# Calogero family

GAUGE_READINGS = ("quartic", "quadratic")
CALOGERO_READINGS = ("printed",) + GAUGE_READINGS


@dataclass(frozen=True)
class CalogeroParams:
    N: int
    nu: Fraction
    p1: Fraction
    p2: Fraction
    eps: Fraction
    m: int
    kappa0: Fraction

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ModelError(f"Calogero N must be an integer >= 2, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "m", int(self.m))
        for name in ("nu", "p1", "p2", "eps", "kappa0"):
            object.__setattr__(self, name, Fraction(parse_scalar(getattr(self, name))))

    @property
    def b(self) -> Fraction:
        return Fraction(1 + self.nu * self.N) * (self.N - 1) / 2

    @property
    def gamma(self) -> Fraction:
        return 2 * self.eps * (self.eps - 1 + self.b)

    @property
    def a(self) -> Fraction:
        return self.p1 * (2 - self.p1) + self.p2 * (2 * self.m + 3 * self.eps - 1 + self.b)

    @property
    def ground_energy(self) -> Fraction:
        """N/2 + nu N (N-1)/2"""
        return Fraction(self.N, 2) + self.nu * self.N * (self.N - 1) / 2

    def replace(self, **changes) -> "CalogeroParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return {"model": "calogero", "N": self.N, "nu": format_scalar(self.nu),
                "p1": format_scalar(self.p1), "p2": format_scalar(self.p2),
                "eps": format_scalar(self.eps), "m": self.m, "kappa0": format_scalar(self.kappa0)}


def calogero_potential(params: CalogeroParams, var: str = "tau") -> PolyMat2:
    """V*(tau) as printed, gamma/tau term included"""
    p1, p2 = params.p1, params.p2
    s0 = LaurentPoly(var, {3: -p2 * p2, 2: 2 * p2 * (1 - p1), 1: params.a, -1: params.gamma})
    s1 = LaurentPoly.constant(var, 2 * params.m * params.kappa0)
    s3 = LaurentPoly(var, {1: -2 * p2, 0: 1 - p1})
    return PolyMat2.pauli(s0, s1, s3)


def _calogero_space(params: CalogeroParams, name: str, prefactor, kappa) -> SpaceDescriptor:
    return SpaceDescriptor(name=name, track=TRACK_POLYNOMIAL, degrees=(params.m - 2, params.m),
                           mixer=MixerSpec("upper", (kappa, 0, 0, 0)), prefactor=prefactor,
                           var="tau", model="calogero")


def build_calogero_reduced(params: CalogeroParams) -> Tuple[MatDiffOp2, SpaceDescriptor]:
    """h = tau D^2 + (4 tau + 2b) D + V*(tau), mixer kappa0 D"""
    var = "tau"
    kinetic = DiffOp(var, {2: LaurentPoly.monomial(var, 1), 1: LaurentPoly(var, {1: 4, 0: 2 * params.b})})
    op = MatDiffOp2.from_potential(kinetic, calogero_potential(params, var))
    return op, _calogero_space(params, "printed", None, params.kappa0)


def calogero_gauge(params: CalogeroParams, reading: str) -> GaugeFactor:
    var = "tau"
    if reading == "quartic":
        W = LaurentPoly(var, {4: params.p2 / 2, 2: params.p1})
    elif reading == "quadratic":
        W = LaurentPoly(var, {2: params.p2 / 2, 1: params.p1})
    else:
        raise ModelError(f"Unknown gauge reading {reading!r}; expected one of {GAUGE_READINGS}")
    return GaugeFactor(params.eps, W)


def build_calogero_gauged(params: CalogeroParams, gauge: str) -> Tuple[MatDiffOp2, SpaceDescriptor]:
    """N-body radial operator plus V*, conjugated by |tau|^eps exp(-W).

    The printed coupling 2 m kappa0 sigma1 needs the mixer kappa0/p2 here.
    """
    var = "tau"
    g = calogero_gauge(params, gauge)
    radial = DiffOp(var, {2: LaurentPoly.monomial(var, 1),
                          1: LaurentPoly(var, {1: 2, 0: params.b}),
                          0: LaurentPoly.constant(var, params.ground_energy)})
    op = gauge_conjugate(MatDiffOp2.from_potential(radial, calogero_potential(params, var)), g)
    kappa = params.kappa0 / params.p2 if params.p2 != 0 else params.kappa0
    return op, _calogero_space(params, gauge, g, kappa)


def build_calogero(params: CalogeroParams, reading: str) -> Tuple[MatDiffOp2, SpaceDescriptor]:
    """Operator with the mixer conjugated away, ready for polynomial certification"""
    if reading == "printed":
        op, space = build_calogero_reduced(params)
    else:
        op, space = build_calogero_gauged(params, reading)
    return mixer_conjugate(op, space.mixer), space


def calogero_center(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return points.mean(axis=-1)


def calogero_tau(points) -> np.ndarray:
    """sum_{j<i} (x_j - Y)(x_i - Y) = -1/2 sum_j (x_j - Y)^2

    Y is the centre of mass (1/N) sum_j x_j, not the bare sum; only then is tau
    translation invariant and the identity above exact.
    """
    points = np.asarray(points, dtype=float)
    centered = points - calogero_center(points)[..., None]
    return -0.5 * np.sum(centered * centered, axis=-1)


def calogero_ground_state(points, nu) -> np.ndarray:
    """prod_{i<j} |x_i - x_j|^nu exp(-X^2/2)"""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    value = np.exp(-0.5 * np.sum(points * points, axis=-1))
    for i in range(n):
        for j in range(i + 1, n):
            value = value * np.abs(points[..., i] - points[..., j]) ** float(nu)
    return value


# config parsing

def model_from_dict(spec: dict):
    """Params object for a JSON/YAML model spec"""
    if not isinstance(spec, dict) or "model" not in spec:
        raise ModelError("Model spec must be a mapping with a 'model' key")
    kind = spec["model"]
    try:
        if kind == "sextic":
            return SexticParams(p1=spec.get("p1", 0), p2=spec["p2"], kappa0=spec["kappa0"],
                                m=spec["m"], eps=spec.get("eps", 0),
                                kappa1=spec.get("kappa1", 0), kappa2=spec.get("kappa2", 0),
                                kappa3=spec.get("kappa3", 0), degrees=spec.get("degrees"),
                                perturb=dict(spec.get("perturb") or {}))
        if kind == "lame":
            return LameParams(case=int(spec["case"]), m=spec["m"], delta=spec["delta"],
                              ksq=spec["ksq"], space=spec.get("space"),
                              kappa_sign=int(spec.get("kappa_sign", 1)),
                              perturb=dict(spec.get("perturb") or {}))
        if kind == "calogero":
            return CalogeroParams(N=spec["N"], nu=spec.get("nu", 0), p1=spec.get("p1", 0),
                                  p2=spec.get("p2", 0), eps=spec.get("eps", 0), m=spec["m"],
                                  kappa0=spec.get("kappa0", 0))
        if kind == "goldstone":
            return GoldstoneParams(coupling=spec["coupling"])
    except KeyError as e:
        raise ModelError(f"Model {kind!r} is missing required field {e}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, ModelError):
            raise
        raise ModelError(f"Invalid {kind} parameters: {e}") from e
    raise ModelError(f"Unknown model {kind!r}")


def catalog_entries(m: Optional[int] = None) -> List[dict]:
    rows = []
    for spec in LAME_CATALOG:
        row = {"name": spec.name, "case": spec.case, "prefactor": spec.prefactor_label(),
               "mixer": spec.mixer_label(),
               "degrees": f"(m{spec.degree_offsets[0]:+d}, m{spec.degree_offsets[1]:+d})".replace("+0", ""),
               "kappa_sq": spec.kappa_sq_formula,
               "kappa_orientation": ("+" if spec.rho_sign > 0 else "-") + ("k^2" if spec.rho_has_ksq else "")
               + f"(sigma{'+' if spec.rho_delta_sign > 0 else '-'}delta)",
               "dimension": spec.dimension_formula}
        if m is not None:
            n_deg, m_deg = spec.degrees(m)
            applicable = n_deg >= -1 and m_deg >= -1 and n_deg + m_deg + 2 >= 1
            row["dimension_at_m"] = n_deg + m_deg + 2 if applicable else None
        rows.append(row)
    return rows

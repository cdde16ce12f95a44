import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Final, Iterable, Iterator, Mapping, Optional, Union

from .exceptions import (
    DivergentProduct,
    DivisionByZero,
    InexactDivision,
    LatticeMismatch,
    NonInvertibleLeadingTerm,
    PrecisionExhausted,
    RootOfUnityOutsideCyc8,
    WindowTooSmall,
)

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]
Order = Union[int, float]

EXACT: Final[float] = math.inf
DEFAULT_DENOMINATOR: Final[int] = 24
DEFAULT_ZETA_DENOMINATOR: Final[int] = 4

_TERM_PATTERN = re.compile(r"^\s*(-?\d+)(?:/(\d+))?(?:\s*\*\s*z8(?:\^([0-3]))?)?\s*$")


@dataclass(frozen=True, eq=False)
class Cyc8:
    """Element c0 + c1*z8 + c2*z8^2 + c3*z8^3 of Q(z8), with z8^4 = -1."""

    c0: Fraction = Fraction(0)
    c1: Fraction = Fraction(0)
    c2: Fraction = Fraction(0)
    c3: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("c0", "c1", "c2", "c3"):
            value = getattr(self, name)
            if not isinstance(value, Fraction):
                object.__setattr__(self, name, Fraction(value))

    @classmethod
    def coerce(cls, value: Union["Cyc8", Rational]) -> "Cyc8":
        if isinstance(value, Cyc8):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(Fraction(value))
        raise TypeError(f"cannot interpret {value!r} as an element of Q(z8)")

    @classmethod
    def zeta8(cls, power: int = 1) -> "Cyc8":
        power %= 8
        sign = -1 if power >= 4 else 1
        coeffs = [0, 0, 0, 0]
        coeffs[power % 4] = sign
        return cls(*coeffs)

    @classmethod
    def root_of_unity(cls, turns: Rational) -> "Cyc8":
        """e^{2 pi i turns}, available when 8*turns is an integer."""
        scaled = Fraction(turns) * 8
        if scaled.denominator != 1:
            raise RootOfUnityOutsideCyc8(f"e^(2 pi i * {turns}) is not an 8th root of unity")
        return cls.zeta8(scaled.numerator)

    @property
    def coeffs(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.c0, self.c1, self.c2, self.c3)

    @property
    def is_rational(self) -> bool:
        return not (self.c1 or self.c2 or self.c3)

    def __bool__(self) -> bool:
        return bool(self.c0 or self.c1 or self.c2 or self.c3)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Cyc8(other)
        if not isinstance(other, Cyc8):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        if self.is_rational:
            return hash(self.c0)
        return hash(self.coeffs)

    def __neg__(self) -> "Cyc8":
        return Cyc8(-self.c0, -self.c1, -self.c2, -self.c3)

    def __add__(self, other: Union["Cyc8", Rational]) -> "Cyc8":
        if isinstance(other, (int, Fraction)):
            return Cyc8(self.c0 + other, self.c1, self.c2, self.c3)
        if not isinstance(other, Cyc8):
            return NotImplemented
        return Cyc8(self.c0 + other.c0, self.c1 + other.c1, self.c2 + other.c2, self.c3 + other.c3)

    __radd__ = __add__

    def __sub__(self, other: Union["Cyc8", Rational]) -> "Cyc8":
        if isinstance(other, (int, Fraction)):
            return Cyc8(self.c0 - other, self.c1, self.c2, self.c3)
        if not isinstance(other, Cyc8):
            return NotImplemented
        return Cyc8(self.c0 - other.c0, self.c1 - other.c1, self.c2 - other.c2, self.c3 - other.c3)

    def __rsub__(self, other: Rational) -> "Cyc8":
        return (-self) + other

    def __mul__(self, other: Union["Cyc8", Rational]) -> "Cyc8":
        if isinstance(other, (int, Fraction)):
            return Cyc8(self.c0 * other, self.c1 * other, self.c2 * other, self.c3 * other)
        if not isinstance(other, Cyc8):
            return NotImplemented
        a0, a1, a2, a3 = self.c0, self.c1, self.c2, self.c3
        b0, b1, b2, b3 = other.c0, other.c1, other.c2, other.c3
        if not (b1 or b2 or b3):
            return Cyc8(a0 * b0, a1 * b0, a2 * b0, a3 * b0)
        if not (a1 or a2 or a3):
            return Cyc8(a0 * b0, a0 * b1, a0 * b2, a0 * b3)
        return Cyc8(
            a0 * b0 - a1 * b3 - a2 * b2 - a3 * b1,
            a0 * b1 + a1 * b0 - a2 * b3 - a3 * b2,
            a0 * b2 + a1 * b1 + a2 * b0 - a3 * b3,
            a0 * b3 + a1 * b2 + a2 * b1 + a3 * b0,
        )

    __rmul__ = __mul__

    def galois(self, k: int) -> "Cyc8":
        """Apply the automorphism z8 -> z8^k (k odd)."""
        if k % 2 == 0:
            raise ValueError("Galois automorphisms of Q(z8) are z8 -> z8^k with k odd")
        result = Cyc8(self.c0)
        for power, coeff in enumerate(self.coeffs[1:], start=1):
            if coeff:
                result = result + Cyc8.zeta8(power * k) * coeff
        return result

    def conjugate(self) -> "Cyc8":
        return self.galois(7)

    def norm(self) -> Fraction:
        return (self * self.galois(3) * self.galois(5) * self.galois(7)).c0

    def inverse(self) -> "Cyc8":
        if not self:
            raise DivisionByZero("division by zero in Q(z8)")
        if self.is_rational:
            return Cyc8(1 / self.c0)
        partner = self.galois(3) * self.galois(5) * self.galois(7)
        return partner * (1 / (self * partner).c0)

    def __truediv__(self, other: Union["Cyc8", Rational]) -> "Cyc8":
        if isinstance(other, (int, Fraction)):
            if not other:
                raise DivisionByZero("division by zero in Q(z8)")
            return self * (1 / Fraction(other))
        if not isinstance(other, Cyc8):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other: Rational) -> "Cyc8":
        return Cyc8(other) * self.inverse()

    def __pow__(self, exponent: int) -> "Cyc8":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result, base = Cyc8(1), self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def to_complex(self, ctx):
        value = ctx.mpc(self.c0.numerator) / self.c0.denominator
        for power, coeff in enumerate(self.coeffs[1:], start=1):
            if coeff:
                value += ctx.expjpi(ctx.mpf(power) / 4) * (ctx.mpf(coeff.numerator) / coeff.denominator)
        return value

    def __str__(self) -> str:
        terms = [
            f"{self.c0.numerator}/{self.c0.denominator}",
            f"{self.c1.numerator}/{self.c1.denominator}*z8",
        ]
        terms += [f"{c.numerator}/{c.denominator}*z8^{k}" for k, c in ((2, self.c2), (3, self.c3))]
        return " + ".join(terms)

    @classmethod
    def parse(cls, text: str) -> "Cyc8":
        coeffs = [Fraction(0)] * 4
        for token in text.split(" + "):
            match = _TERM_PATTERN.match(token)
            if not match:
                raise ValueError(f"cannot parse cyclotomic term {token!r}")
            numerator, denominator, power = match.groups()
            if "z8" in token:
                index = int(power) if power else 1
            else:
                index = 0
            coeffs[index] += Fraction(int(numerator), int(denominator or 1))
        return cls(*coeffs)


Coefficient = Union[Cyc8, Rational]

ZERO: Final[Cyc8] = Cyc8()
ONE: Final[Cyc8] = Cyc8(1)
I: Final[Cyc8] = Cyc8.zeta8(2)


def _scale(exponent: Rational, denominator: int) -> int:
    scaled = Fraction(exponent) * denominator
    if scaled.denominator != 1:
        raise LatticeMismatch(f"exponent {exponent} is not on the 1/{denominator} lattice")
    return scaled.numerator


def _scale_order(order: Union[Rational, float], denominator: int) -> Order:
    if order == EXACT:
        return EXACT
    return math.ceil(Fraction(order) * denominator)


def _unscale(scaled: Order, denominator: int) -> Union[Fraction, float]:
    if scaled == EXACT:
        return EXACT
    return Fraction(scaled, denominator)


@dataclass(frozen=True)
class Monomial:
    coef: Cyc8 = ONE
    q_exp: Fraction = Fraction(0)
    zeta_exp: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coef", Cyc8.coerce(self.coef))
        object.__setattr__(self, "q_exp", Fraction(self.q_exp))
        object.__setattr__(self, "zeta_exp", Fraction(self.zeta_exp))

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.coef * other.coef, self.q_exp + other.q_exp, self.zeta_exp + other.zeta_exp)

    def __truediv__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.coef / other.coef, self.q_exp - other.q_exp, self.zeta_exp - other.zeta_exp)

    def __neg__(self) -> "Monomial":
        return Monomial(-self.coef, self.q_exp, self.zeta_exp)

    def __pow__(self, exponent: int) -> "Monomial":
        return Monomial(self.coef**exponent, self.q_exp * exponent, self.zeta_exp * exponent)

    def to_series(
        self, order: Union[Rational, float] = EXACT, denominator: int = DEFAULT_DENOMINATOR
    ) -> "QSeries":
        if self.zeta_exp:
            raise LatticeMismatch("a monomial carrying a zeta power is not a q-series")
        return QSeries.from_terms({self.q_exp: self.coef}, order, denominator)


class QSeries:
    """Truncated Laurent-Puiseux series sum c_k q^(k/D) + O(q^(order/D)) over Q(z8)."""

    __slots__ = ("denominator", "order", "_coeffs")

    def __init__(
        self,
        coeffs: Optional[Mapping[int, Coefficient]] = None,
        order: Order = EXACT,
        denominator: int = DEFAULT_DENOMINATOR,
    ) -> None:
        self.denominator = denominator
        self.order = order
        self._coeffs: dict[int, Cyc8] = {}
        for exponent, value in (coeffs or {}).items():
            coeff = Cyc8.coerce(value)
            if coeff and exponent < order:
                self._coeffs[exponent] = coeff

    @classmethod
    def from_terms(
        cls,
        terms: Mapping[Rational, Coefficient],
        order: Union[Rational, float] = EXACT,
        denominator: int = DEFAULT_DENOMINATOR,
    ) -> "QSeries":
        scaled: dict[int, Cyc8] = {}
        for exponent, value in terms.items():
            key = _scale(exponent, denominator)
            scaled[key] = scaled.get(key, ZERO) + Cyc8.coerce(value)
        return cls(scaled, _scale_order(order, denominator), denominator)

    @classmethod
    def one(cls, order: Union[Rational, float] = EXACT, denominator: int = DEFAULT_DENOMINATOR) -> "QSeries":
        return cls({0: ONE}, _scale_order(order, denominator), denominator)

    @classmethod
    def zero(cls, order: Union[Rational, float] = EXACT, denominator: int = DEFAULT_DENOMINATOR) -> "QSeries":
        return cls({}, _scale_order(order, denominator), denominator)

    @property
    def floor(self) -> Order:
        return min(self._coeffs) if self._coeffs else self.order

    @property
    def real_order(self) -> Union[Fraction, float]:
        return _unscale(self.order, self.denominator)

    @property
    def is_exact(self) -> bool:
        return self.order == EXACT

    def __len__(self) -> int:
        return len(self._coeffs)

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def scaled_items(self) -> list[tuple[int, Cyc8]]:
        return sorted(self._coeffs.items())

    def items(self) -> list[tuple[Fraction, Cyc8]]:
        return [(Fraction(k, self.denominator), c) for k, c in self.scaled_items()]

    def coefficient(self, exponent: Rational) -> Cyc8:
        key = _scale(exponent, self.denominator)
        if key >= self.order:
            raise PrecisionExhausted(f"coefficient of q^{exponent} lies beyond the truncation order")
        return self._coeffs.get(key, ZERO)

    def integer_coefficients(self) -> dict[Fraction, int]:
        result = {}
        for exponent, coeff in self.items():
            if not coeff.is_rational or coeff.c0.denominator != 1:
                raise ValueError(f"coefficient {coeff} of q^{exponent} is not an integer")
            result[exponent] = coeff.c0.numerator
        return result

    def _check(self, other: "QSeries") -> None:
        if self.denominator != other.denominator:
            raise LatticeMismatch(
                f"series on lattices 1/{self.denominator} and 1/{other.denominator} cannot be combined"
            )

    def truncate(self, order: Union[Rational, float]) -> "QSeries":
        scaled = min(self.order, _scale_order(order, self.denominator))
        return QSeries(self._coeffs, scaled, self.denominator)

    def __neg__(self) -> "QSeries":
        return QSeries({k: -c for k, c in self._coeffs.items()}, self.order, self.denominator)

    def __add__(self, other: Union["QSeries", Coefficient]) -> "QSeries":
        if not isinstance(other, QSeries):
            other = QSeries({0: Cyc8.coerce(other)}, EXACT, self.denominator)
        self._check(other)
        order = min(self.order, other.order)
        coeffs = {k: c for k, c in self._coeffs.items() if k < order}
        for k, c in other._coeffs.items():
            if k < order:
                coeffs[k] = coeffs.get(k, ZERO) + c
        return QSeries(coeffs, order, self.denominator)

    __radd__ = __add__

    def __sub__(self, other: Union["QSeries", Coefficient]) -> "QSeries":
        return self + (-other)

    def __rsub__(self, other: Coefficient) -> "QSeries":
        return (-self) + other

    def scale(self, factor: Coefficient) -> "QSeries":
        factor = Cyc8.coerce(factor)
        return QSeries({k: c * factor for k, c in self._coeffs.items()}, self.order, self.denominator)

    def __mul__(self, other: Union["QSeries", Coefficient]) -> "QSeries":
        if not isinstance(other, QSeries):
            return self.scale(other)
        self._check(other)
        order = min(self.order + other.floor, other.order + self.floor)
        right = other.scaled_items()
        coeffs: dict[int, Cyc8] = {}
        for k1, c1 in self._coeffs.items():
            limit = order - k1
            for k2, c2 in right:
                if k2 >= limit:
                    break
                key = k1 + k2
                coeffs[key] = coeffs.get(key, ZERO) + c1 * c2
        return QSeries(coeffs, order, self.denominator)

    __rmul__ = __mul__

    def shift(self, exponent: Rational) -> "QSeries":
        """Multiply by q^exponent."""
        step = _scale(exponent, self.denominator)
        return QSeries({k + step: c for k, c in self._coeffs.items()}, self.order + step, self.denominator)

    def dilate(self, factor: int) -> "QSeries":
        """Substitute q -> q^factor."""
        if factor <= 0:
            raise ValueError("dilation factor must be positive")
        coeffs = {k * factor: c for k, c in self._coeffs.items()}
        return QSeries(coeffs, self.order * factor, self.denominator)

    def invert(self, order: Optional[Union[Rational, float]] = None) -> "QSeries":
        if not self._coeffs:
            raise NonInvertibleLeadingTerm("the zero series has no inverse")
        lead = self.floor
        target = self.order - 2 * lead if self.order != EXACT else EXACT
        if order is not None:
            target = min(target, _scale_order(order, self.denominator))
        if target == EXACT:
            raise PrecisionExhausted("inverting an exact series needs an explicit truncation order")
        lead_inverse = self._coeffs[lead].inverse()
        tail = [(k - lead, c) for k, c in self.scaled_items() if k != lead]
        step = 0
        for k, _ in tail:
            step = math.gcd(step, k)
        step = step or 1
        result: dict[int, Cyc8] = {}
        # offsets are relative to q^-lead
        for offset in range(0, target + lead, step):
            if offset == 0:
                result[0] = lead_inverse
                continue
            total = ZERO
            for k, c in tail:
                if k > offset:
                    break
                previous = result.get(offset - k)
                if previous is not None:
                    total = total + c * previous
            if total:
                result[offset] = -(total * lead_inverse)
        return QSeries({k - lead: c for k, c in result.items()}, target, self.denominator)

    def __truediv__(self, other: Union["QSeries", Coefficient]) -> "QSeries":
        if isinstance(other, QSeries):
            return self * other.invert()
        return self.scale(Cyc8.coerce(other).inverse())

    def __pow__(self, exponent: int) -> "QSeries":
        if exponent < 0:
            return self.invert() ** (-exponent)
        result, base = QSeries({0: ONE}, EXACT, self.denominator), self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def mul_binomial(self, coef: Coefficient, exponent: Rational) -> "QSeries":
        """Multiply by (1 - coef*q^exponent)."""
        step = _scale(exponent, self.denominator)
        coef = Cyc8.coerce(coef)
        order = self.order + min(0, step)
        coeffs = dict(self._coeffs)
        for k, c in self._coeffs.items():
            key = k + step
            coeffs[key] = coeffs.get(key, ZERO) - c * coef
        return QSeries(coeffs, order, self.denominator)

    def div_binomial(self, coef: Coefficient, exponent: Rational) -> "QSeries":
        """Divide by (1 - coef*q^exponent), expanding the geometric series in positive powers of q."""
        step = _scale(exponent, self.denominator)
        coef = Cyc8.coerce(coef)
        if step == 0:
            if coef == ONE:
                raise DivisionByZero("division by the vanishing factor (1 - 1)")
            return self.scale((ONE - coef).inverse())
        if step < 0:
            inverse = coef.inverse()
            return self.scale(-inverse).shift(Fraction(-step, self.denominator)).div_binomial(
                inverse, Fraction(-step, self.denominator)
            )
        if self.order == EXACT:
            raise PrecisionExhausted("a geometric expansion needs a finite truncation order")
        coeffs: dict[int, Cyc8] = {}
        seen: set[int] = set()
        for k in sorted(self._coeffs):
            if k % step in seen:
                continue
            seen.add(k % step)
            # b_x = a_x + coef * b_(x - step) along the residue class of k
            key, carry = k, ZERO
            while key < self.order:
                carry = carry * coef + self._coeffs.get(key, ZERO)
                if carry:
                    coeffs[key] = carry
                key += step
        return QSeries(coeffs, self.order, self.denominator)

    def evaluate(self, tau, ctx):
        """Sum the stored terms numerically at q = e^{2 pi i tau}."""
        total = ctx.mpc(0)
        for k, c in self._coeffs.items():
            total += c.to_complex(ctx) * ctx.expjpi(2 * tau * k / self.denominator)
        return total

    def first_mismatch(self, other: "QSeries") -> Optional[tuple[Fraction, Cyc8, Cyc8]]:
        self._check(other)
        order = min(self.order, other.order)
        keys = sorted(k for k in set(self._coeffs) | set(other._coeffs) if k < order)
        for k in keys:
            left, right = self._coeffs.get(k, ZERO), other._coeffs.get(k, ZERO)
            if left != right:
                return Fraction(k, self.denominator), left, right
        return None

    def agrees_with(self, other: "QSeries") -> bool:
        return self.first_mismatch(other) is None

    def to_json(self) -> list[list[str]]:
        return [[f"{k}/{self.denominator}", str(c)] for k, c in self.scaled_items()]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        return (
            self.denominator == other.denominator
            and self.order == other.order
            and self._coeffs == other._coeffs
        )

    def __repr__(self) -> str:
        shown = ", ".join(f"{k}/{self.denominator}: {c}" for k, c in self.scaled_items()[:6])
        more = ", ..." if len(self._coeffs) > 6 else ""
        return f"QSeries({{{shown}{more}}}, order={self.real_order})"


def qpochhammer(
    base: Monomial,
    n: Union[int, float],
    order: Union[Rational, float],
    step: Rational = 1,
    denominator: int = DEFAULT_DENOMINATOR,
) -> QSeries:
    """(base; q^step)_n = prod_{j<n} (1 - base*q^(j*step)), truncated at O(q^order)."""
    if base.zeta_exp:
        raise LatticeMismatch("use jacobi_qpochhammer for bases carrying a zeta power")
    exponents = _pochhammer_exponents(base.q_exp, n, order, Fraction(step))
    slack = -sum(e for e in exponents if e < 0)
    start = order + slack if order != EXACT else EXACT
    result = QSeries.one(start, denominator)
    for exponent in sorted(exponents, key=lambda e: e < 0):
        result = result.mul_binomial(base.coef, exponent)
    return result.truncate(order)


def _pochhammer_exponents(
    first: Fraction, n: Union[int, float], order: Union[Rational, float], step: Fraction
) -> list[Fraction]:
    if n == EXACT:
        if step <= 0:
            raise DivergentProduct("an infinite q-product needs exponents tending to infinity")
        if order == EXACT:
            raise DivergentProduct("an infinite q-product needs a finite truncation order")
        negative = [first + j * step for j in range(int(max(0, math.ceil(-first / step))))]
        slack = -sum(e for e in negative if e < 0)
        exponents, j = [], 0
        while first + j * step < order + slack:
            exponents.append(first + j * step)
            j += 1
        return exponents
    return [first + j * step for j in range(int(n))]


@dataclass(frozen=True)
class SupportBound:
    """side*r <= slope*m + offset for every term q^m zeta^r of a series, truncated tail included."""

    slope: Fraction
    offset: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "slope", Fraction(self.slope))
        object.__setattr__(self, "offset", Fraction(self.offset))


def _merge_bounds(
    first: Optional[SupportBound], second: Optional[SupportBound], floor1: Fraction, floor2: Fraction
) -> Optional[SupportBound]:
    if first is None or second is None:
        return None
    slope = max(first.slope, second.slope)
    offset = first.offset + second.offset
    offset += (slope - first.slope) * max(0, -floor1) + (slope - second.slope) * max(0, -floor2)
    return SupportBound(slope, offset)


def _union_bounds(
    first: Optional[SupportBound], second: Optional[SupportBound], floor1: Fraction, floor2: Fraction
) -> Optional[SupportBound]:
    if first is None or second is None:
        return None
    slope = max(first.slope, second.slope)
    offset = max(
        first.offset + (slope - first.slope) * max(0, -floor1),
        second.offset + (slope - second.slope) * max(0, -floor2),
    )
    return SupportBound(slope, offset)


def _shift_bound(
    bound: Optional[SupportBound], q_exp: Fraction, zeta_exp: Fraction
) -> Optional[SupportBound]:
    if bound is None:
        return None
    return SupportBound(bound.slope, bound.offset - bound.slope * q_exp + zeta_exp)


class JacobiSeries:
    """Series in q (lattice 1/D, truncated) with finite Laurent polynomials in zeta^(1/Dz) as coefficients."""

    __slots__ = ("denominator", "zeta_denominator", "order", "upper", "lower", "_coeffs")

    def __init__(
        self,
        coeffs: Optional[Mapping[int, Mapping[int, Coefficient]]] = None,
        order: Order = EXACT,
        denominator: int = DEFAULT_DENOMINATOR,
        zeta_denominator: int = DEFAULT_ZETA_DENOMINATOR,
        upper: Optional[SupportBound] = None,
        lower: Optional[SupportBound] = None,
    ) -> None:
        self.denominator = denominator
        self.zeta_denominator = zeta_denominator
        self.order = order
        self._coeffs: dict[int, dict[int, Cyc8]] = {}
        for m, row in (coeffs or {}).items():
            if m >= order:
                continue
            cleaned = {r: Cyc8.coerce(c) for r, c in row.items() if Cyc8.coerce(c)}
            if cleaned:
                self._coeffs[m] = cleaned
        if order == EXACT and upper is None and lower is None:
            upper, lower = self._bounds_from_data()
        self.upper = upper
        self.lower = lower

    def _bounds_from_data(self) -> tuple[SupportBound, SupportBound]:
        exponents = [Fraction(r, self.zeta_denominator) for row in self._coeffs.values() for r in row]
        high = max(exponents, default=Fraction(0))
        low = min(exponents, default=Fraction(0))
        return SupportBound(0, max(high, 0)), SupportBound(0, max(-low, 0))

    @classmethod
    def from_terms(
        cls,
        terms: Iterable[tuple[Rational, Rational, Coefficient]],
        order: Union[Rational, float] = EXACT,
        denominator: int = DEFAULT_DENOMINATOR,
        zeta_denominator: int = DEFAULT_ZETA_DENOMINATOR,
        upper: Optional[SupportBound] = None,
        lower: Optional[SupportBound] = None,
    ) -> "JacobiSeries":
        coeffs: dict[int, dict[int, Cyc8]] = {}
        for q_exp, zeta_exp, value in terms:
            row = coeffs.setdefault(_scale(q_exp, denominator), {})
            key = _scale(zeta_exp, zeta_denominator)
            row[key] = row.get(key, ZERO) + Cyc8.coerce(value)
        return cls(coeffs, _scale_order(order, denominator), denominator, zeta_denominator, upper, lower)

    @classmethod
    def from_qseries(
        cls, series: QSeries, zeta_denominator: int = DEFAULT_ZETA_DENOMINATOR
    ) -> "JacobiSeries":
        coeffs = {k: {0: c} for k, c in series.scaled_items()}
        bound = SupportBound(0, 0)
        return cls(coeffs, series.order, series.denominator, zeta_denominator, bound, bound)

    @classmethod
    def one(
        cls,
        order: Union[Rational, float] = EXACT,
        denominator: int = DEFAULT_DENOMINATOR,
        zeta_denominator: int = DEFAULT_ZETA_DENOMINATOR,
    ) -> "JacobiSeries":
        bound = SupportBound(0, 0)
        order = _scale_order(order, denominator)
        return cls({0: {0: ONE}}, order, denominator, zeta_denominator, bound, bound)

    @property
    def floor(self) -> Order:
        return min(self._coeffs) if self._coeffs else self.order

    @property
    def real_floor(self) -> Fraction:
        floor = self.floor
        return Fraction(floor, self.denominator) if floor != EXACT else Fraction(0)

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def iter_terms(self) -> Iterator[tuple[Fraction, Fraction, Cyc8]]:
        for m in sorted(self._coeffs):
            for r in sorted(self._coeffs[m]):
                yield Fraction(m, self.denominator), Fraction(r, self.zeta_denominator), self._coeffs[m][r]

    def zeta_support(self) -> tuple[Fraction, Fraction]:
        exponents = [Fraction(r, self.zeta_denominator) for row in self._coeffs.values() for r in row]
        if not exponents:
            return Fraction(0), Fraction(0)
        return min(exponents), max(exponents)

    def zeta_coefficient(self, zeta_exp: Rational) -> QSeries:
        key = _scale(zeta_exp, self.zeta_denominator)
        coeffs = {m: row[key] for m, row in self._coeffs.items() if key in row}
        return QSeries(coeffs, self.order, self.denominator)

    def _check(self, other: "JacobiSeries") -> None:
        if (self.denominator, self.zeta_denominator) != (other.denominator, other.zeta_denominator):
            raise LatticeMismatch("Jacobi series on different lattices cannot be combined")

    def _lift(self, other: Union["JacobiSeries", QSeries, Coefficient]) -> "JacobiSeries":
        if isinstance(other, JacobiSeries):
            self._check(other)
            return other
        if isinstance(other, QSeries):
            if other.denominator != self.denominator:
                raise LatticeMismatch("q-lattices differ")
            return JacobiSeries.from_qseries(other, self.zeta_denominator)
        coeff = Cyc8.coerce(other)
        bound = SupportBound(0, 0)
        return JacobiSeries({0: {0: coeff}}, EXACT, self.denominator, self.zeta_denominator, bound, bound)

    def truncate(self, order: Union[Rational, float]) -> "JacobiSeries":
        scaled = min(self.order, _scale_order(order, self.denominator))
        return JacobiSeries(
            self._coeffs, scaled, self.denominator, self.zeta_denominator, self.upper, self.lower
        )

    def __neg__(self) -> "JacobiSeries":
        coeffs = {m: {r: -c for r, c in row.items()} for m, row in self._coeffs.items()}
        return JacobiSeries(
            coeffs, self.order, self.denominator, self.zeta_denominator, self.upper, self.lower
        )

    def __add__(self, other: Union["JacobiSeries", QSeries, Coefficient]) -> "JacobiSeries":
        other = self._lift(other)
        order = min(self.order, other.order)
        coeffs: dict[int, dict[int, Cyc8]] = {}
        for source in (self._coeffs, other._coeffs):
            for m, row in source.items():
                if m >= order:
                    continue
                target = coeffs.setdefault(m, {})
                for r, c in row.items():
                    target[r] = target.get(r, ZERO) + c
        floors = (self.real_floor, other.real_floor)
        return JacobiSeries(
            coeffs,
            order,
            self.denominator,
            self.zeta_denominator,
            _union_bounds(self.upper, other.upper, *floors),
            _union_bounds(self.lower, other.lower, *floors),
        )

    __radd__ = __add__

    def __sub__(self, other: Union["JacobiSeries", QSeries, Coefficient]) -> "JacobiSeries":
        return self + (-self._lift(other))

    def scale(self, factor: Coefficient) -> "JacobiSeries":
        factor = Cyc8.coerce(factor)
        coeffs = {m: {r: c * factor for r, c in row.items()} for m, row in self._coeffs.items()}
        return JacobiSeries(
            coeffs, self.order, self.denominator, self.zeta_denominator, self.upper, self.lower
        )

    def __mul__(self, other: Union["JacobiSeries", QSeries, Coefficient]) -> "JacobiSeries":
        if not isinstance(other, (JacobiSeries, QSeries)):
            return self.scale(other)
        other = self._lift(other)
        order = min(self.order + other.floor, other.order + self.floor)
        right = sorted(other._coeffs.items())
        coeffs: dict[int, dict[int, Cyc8]] = {}
        for m1, row1 in self._coeffs.items():
            limit = order - m1
            for m2, row2 in right:
                if m2 >= limit:
                    break
                target = coeffs.setdefault(m1 + m2, {})
                for r1, c1 in row1.items():
                    for r2, c2 in row2.items():
                        key = r1 + r2
                        target[key] = target.get(key, ZERO) + c1 * c2
        floors = (self.real_floor, other.real_floor)
        return JacobiSeries(
            coeffs,
            order,
            self.denominator,
            self.zeta_denominator,
            _merge_bounds(self.upper, other.upper, *floors),
            _merge_bounds(self.lower, other.lower, *floors),
        )

    __rmul__ = __mul__

    def shift(self, q_exp: Rational = 0, zeta_exp: Rational = 0) -> "JacobiSeries":
        """Multiply by q^q_exp zeta^zeta_exp."""
        dm, dr = _scale(q_exp, self.denominator), _scale(zeta_exp, self.zeta_denominator)
        coeffs = {m + dm: {r + dr: c for r, c in row.items()} for m, row in self._coeffs.items()}
        q_exp, zeta_exp = Fraction(q_exp), Fraction(zeta_exp)
        return JacobiSeries(
            coeffs,
            self.order + dm,
            self.denominator,
            self.zeta_denominator,
            _shift_bound(self.upper, q_exp, zeta_exp),
            _shift_bound(self.lower, q_exp, -zeta_exp),
        )

    def mul_binomial(self, coef: Coefficient, q_exp: Rational, zeta_exp: Rational = 0) -> "JacobiSeries":
        """Multiply by (1 - coef*q^q_exp*zeta^zeta_exp)."""
        return self - self.shift(q_exp, zeta_exp).scale(coef)

    def div_q_binomial(self, coef: Coefficient, q_exp: Rational) -> "JacobiSeries":
        """Divide by the zeta-free factor (1 - coef*q^q_exp)."""
        by_zeta: dict[int, dict[int, Cyc8]] = {}
        for m, row in self._coeffs.items():
            for r, c in row.items():
                by_zeta.setdefault(r, {})[m] = c
        coeffs: dict[int, dict[int, Cyc8]] = {}
        order = self.order
        for r, column in by_zeta.items():
            quotient = QSeries(column, self.order, self.denominator).div_binomial(coef, q_exp)
            order = min(order, quotient.order)
            for m, c in quotient.scaled_items():
                coeffs.setdefault(m, {})[r] = c
        if not by_zeta:
            order = QSeries({}, self.order, self.denominator).div_binomial(coef, q_exp).order
        return JacobiSeries(coeffs, order, self.denominator, self.zeta_denominator, self.upper, self.lower)

    def _specialize(
        self, q_per_zeta: Fraction, weight: Callable[[Fraction], Cyc8]
    ) -> QSeries:
        """Replace each zeta^r by weight(r) * q^(q_per_zeta * r)."""
        order = self._specialized_order(q_per_zeta)
        coeffs: dict[int, Cyc8] = {}
        for m, row in self._coeffs.items():
            for r, c in row.items():
                zeta_exp = Fraction(r, self.zeta_denominator)
                key = m + _scale(q_per_zeta * zeta_exp, self.denominator)
                if key >= order:
                    continue
                factor = weight(zeta_exp)
                if factor:
                    coeffs[key] = coeffs.get(key, ZERO) + c * factor
        result = QSeries(coeffs, order, self.denominator)
        if order != EXACT and result and order <= result.floor:
            raise PrecisionExhausted("substitution leaves no certified coefficient")
        return result

    def _specialized_order(self, q_per_zeta: Fraction) -> Order:
        if self.order == EXACT:
            return EXACT
        if q_per_zeta == 0:
            return self.order
        bound = self.lower if q_per_zeta > 0 else self.upper
        if bound is None:
            raise PrecisionExhausted("the zeta support of the truncated tail is not bounded")
        factor = abs(q_per_zeta)
        contraction = 1 - factor * bound.slope
        if contraction < 0:
            raise PrecisionExhausted("substitution pulls the truncated tail below every order")
        order = contraction * Fraction(self.order, self.denominator) - factor * bound.offset
        scaled = math.ceil(order * self.denominator)
        logger.debug("zeta substitution q^%s: order %s -> %s", q_per_zeta, self.order, scaled)
        return scaled

    def substitute(self, value: Monomial) -> QSeries:
        """Replace zeta by value = coef*q^e (fractional zeta powers need coef = 1)."""
        coef = value.coef

        def weight(zeta_exp: Fraction) -> Cyc8:
            if zeta_exp.denominator == 1:
                return coef**zeta_exp.numerator
            if coef != ONE:
                raise LatticeMismatch("fractional zeta power of a coefficient other than 1")
            return ONE

        return self._specialize(value.q_exp, weight)

    def substitute_torsion(self, a: Rational, b: Rational) -> QSeries:
        """Replace zeta by e^{2 pi i (a tau + b)}."""
        a, b = Fraction(a), Fraction(b)
        return self._specialize(a, lambda zeta_exp: Cyc8.root_of_unity(zeta_exp * b))

    def dzeta_at(self, point: str) -> QSeries:
        """[d/dzeta J] at zeta = 1 ("one") or [zeta d/dzeta J] at zeta = q ("q")."""
        if point == "one":
            return self._specialize(Fraction(0), lambda zeta_exp: Cyc8(zeta_exp))
        if point == "q":
            return self._specialize(Fraction(1), lambda zeta_exp: Cyc8(zeta_exp))
        raise ValueError(f"unknown evaluation point {point!r}, expected 'one' or 'q'")

    def divide_one_minus_zeta(self) -> "JacobiSeries":
        """Exact division by (1 - zeta), coefficientwise in q."""
        step = self.zeta_denominator
        coeffs: dict[int, dict[int, Cyc8]] = {}
        for m, row in self._coeffs.items():
            quotient: dict[int, Cyc8] = {}
            classes: dict[int, list[int]] = {}
            for r in row:
                classes.setdefault(r % step, []).append(r)
            for keys in classes.values():
                low, high = min(keys), max(keys)
                running = ZERO
                for r in range(low, high + step, step):
                    running = running + row.get(r, ZERO)
                    if r == high:
                        if running:
                            raise InexactDivision(
                                f"q^{Fraction(m, self.denominator)} coefficient is no multiple of (1 - zeta)"
                            )
                    elif running:
                        quotient[r] = running
            if quotient:
                coeffs[m] = quotient
        return JacobiSeries(
            coeffs, self.order, self.denominator, self.zeta_denominator, self.upper, self.lower
        )

    def first_mismatch(
        self, other: "JacobiSeries", window: Optional[tuple[Rational, Rational]] = None
    ) -> Optional[tuple[Fraction, Fraction, Cyc8, Cyc8]]:
        self._check(other)
        if window is not None:
            for series in (self, other):
                low, high = series.zeta_support()
                if low < window[0] or high > window[1]:
                    raise WindowTooSmall(
                        f"zeta support [{low}, {high}] exceeds the window [{window[0]}, {window[1]}]"
                    )
        order = min(self.order, other.order)
        for m in sorted(k for k in set(self._coeffs) | set(other._coeffs) if k < order):
            left, right = self._coeffs.get(m, {}), other._coeffs.get(m, {})
            for r in sorted(set(left) | set(right)):
                a, b = left.get(r, ZERO), right.get(r, ZERO)
                if a != b:
                    return Fraction(m, self.denominator), Fraction(r, self.zeta_denominator), a, b
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JacobiSeries):
            return NotImplemented
        return (
            (self.denominator, self.zeta_denominator, self.order)
            == (other.denominator, other.zeta_denominator, other.order)
            and self._coeffs == other._coeffs
        )

    def __repr__(self) -> str:
        order = _unscale(self.order, self.denominator)
        return f"JacobiSeries({len(self._coeffs)} q-coefficients, order={order})"


def _pochhammer_bound(
    zeta_step: Fraction, exponents: list[Fraction], n: Union[int, float], step: Fraction, slope: Fraction
) -> Optional[SupportBound]:
    """Smallest offset h with zeta_step*k <= slope*(least q-exponent of k chosen factors) + h for every k."""
    if n != EXACT:
        best, least = Fraction(0), Fraction(0)
        for k, exponent in enumerate(sorted(exponents), start=1):
            least += exponent
            best = max(best, zeta_step * k - slope * least)
        return SupportBound(slope, best)
    if zeta_step and not slope:
        return None
    first = exponents[0] if exponents else Fraction(0)
    best, excess, k = Fraction(0), Fraction(0), 0
    while True:
        increment = zeta_step - slope * (first + step * k)
        if increment <= 0:
            break
        excess += increment
        best = max(best, excess)
        k += 1
    return SupportBound(slope, best)


def jacobi_qpochhammer(
    base: Monomial,
    n: Union[int, float],
    order: Union[Rational, float],
    step: Rational = 1,
    denominator: int = DEFAULT_DENOMINATOR,
    zeta_denominator: int = DEFAULT_ZETA_DENOMINATOR,
    slope: Rational = 1,
) -> JacobiSeries:
    """prod_{j<n} (1 - coef*q^(a + j*step)*zeta^b) as a Jacobi series truncated at O(q^order)."""
    step = Fraction(step)
    exponents = _pochhammer_exponents(base.q_exp, n, order, step)
    slack = -sum(e for e in exponents if e < 0)
    start = order + slack if order != EXACT else EXACT
    result = JacobiSeries.one(start, denominator, zeta_denominator)
    for exponent in sorted(exponents, key=lambda e: e < 0):
        result = result.mul_binomial(base.coef, exponent, base.zeta_exp)
    zeta_step, slope = base.zeta_exp, Fraction(slope)
    return JacobiSeries(
        result.truncate(order)._coeffs,
        min(result.order, _scale_order(order, denominator)),
        denominator,
        zeta_denominator,
        _pochhammer_bound(max(zeta_step, Fraction(0)), exponents, n, step, slope),
        _pochhammer_bound(max(-zeta_step, Fraction(0)), exponents, n, step, slope),
    )


SeriesLike = Union[QSeries, JacobiSeries]


def expand_with_slack(
    build: Callable[[Fraction], SeriesLike], order: Rational, attempts: int = 8
) -> SeriesLike:
    """Call build(order + slack) with growing slack until the result is certified to O(q^order)."""
    order, slack = Fraction(order), Fraction(0)
    for _ in range(attempts):
        result = build(order + slack)
        reached = _unscale(result.order, result.denominator)
        if reached >= order:
            return result.truncate(order)
        slack += order - reached + 1
        logger.debug("expansion reached O(q^%s) only, retrying with slack %s", reached, slack)
    raise PrecisionExhausted(f"could not certify the expansion to O(q^{order}) after {attempts} attempts")

import logging
import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Any, Callable, Final, Sequence, Union

from mpmath.ctx_mp import MPContext
from mpmath.libmp import NoConvergence

from .exceptions import (
    ContourThroughPole,
    DomainViolation,
    PoleProximity,
    PrecisionUnreachable,
    StencilThroughSingularity,
)

logger = logging.getLogger(__name__)

MAX_WINDOW_TERMS: Final[int] = 100_000
WINDOW_MARGIN_BITS: Final[int] = 16
CONTOUR_RADIUS_FACTOR: Final[float] = 0.1
MAX_CONTOUR_NODES: Final[int] = 1024

Number = Any
Evaluator = Callable[[Number], Number]


def make_context(precision: int) -> MPContext:
    if precision < 53:
        raise DomainViolation(f"precision must be at least 53 bits, got {precision}")
    ctx = MPContext()
    ctx.prec = precision
    return ctx


def with_guard_bits(ctx: MPContext, guard_bits: int) -> MPContext:
    return make_context(ctx.prec + guard_bits)


def rational(ctx: MPContext, value: Union[int, Fraction]) -> Number:
    value = Fraction(value)
    return ctx.mpf(value.numerator) / value.denominator


def _decimal_text(value: Fraction) -> str:
    denominator = value.denominator
    while denominator % 2 == 0:
        denominator //= 2
    while denominator % 5 == 0:
        denominator //= 5
    if denominator != 1:
        return repr(float(value))
    text = format(Decimal(value.numerator) / Decimal(value.denominator), "f")
    return text.rstrip("0").rstrip(".") if "." in text else text


@dataclass(frozen=True)
class UHPoint:
    """A point u + iv of the upper half-plane with exactly represented coordinates."""

    u: Fraction
    v: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", Fraction(self.u))
        object.__setattr__(self, "v", Fraction(self.v))
        if self.v <= 0:
            raise DomainViolation(f"imaginary part must be positive, got {self.v}")

    @classmethod
    def parse(cls, text: str) -> "UHPoint":
        try:
            u, v = (Fraction(part.strip()) for part in text.split(","))
        except ValueError as error:
            raise DomainViolation(f"expected 'u,v', got {text!r}") from error
        return cls(u, v)

    def to_complex(self, ctx: MPContext) -> Number:
        return ctx.mpc(rational(ctx, self.u), rational(ctx, self.v))

    def __str__(self) -> str:
        return f"{_decimal_text(self.u)},{_decimal_text(self.v)}"


@dataclass(frozen=True)
class Estimate:
    value: Number
    error: Number


def relative_residual(left: Number, right: Number, ctx: MPContext) -> Number:
    scale = max(abs(left), abs(right))
    if not scale:
        return ctx.mpf(0)
    return abs(left - right) / scale


def summation_window(
    ctx: MPContext, v: Number, low_center: Number, high_center: Number = None, spread: float = 0.0
) -> range:
    """Integers n with exp(-pi*v*(n - c)^2) above the working precision for c in [low_center, high_center]."""
    if high_center is None:
        high_center = low_center
    v = float(v)
    if v <= 0:
        raise DomainViolation("summation window needs a positive imaginary part")
    budget = (ctx.prec + WINDOW_MARGIN_BITS) * math.log(2)
    half = math.sqrt(budget / (math.pi * v)) + 2 + spread
    low = math.floor(float(min(low_center, high_center)) - half)
    high = math.ceil(float(max(low_center, high_center)) + half)
    if high - low > MAX_WINDOW_TERMS:
        raise PrecisionUnreachable(
            f"a window of {high - low} terms is needed at v={v:.3g}; move the point away from the real axis"
        )
    return range(low, high + 1)


def qpochhammer_numeric(q: Number, ctx: MPContext) -> Number:
    try:
        return ctx.qp(q)
    except NoConvergence as error:
        raise PrecisionUnreachable(f"(q;q)_inf did not converge at |q| = {float(abs(q)):.6g}") from error


class Jet:
    """Value and the first Wirtinger derivatives d^k/dz^k of a function at a fixed point."""

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[Number]) -> None:
        self.terms = tuple(terms)

    @classmethod
    def constant(cls, value: Number, order: int = 2) -> "Jet":
        return cls([value] + [0] * order)

    @classmethod
    def exponential(cls, value: Number, slope: Number, order: int = 2) -> "Jet":
        """Jet of value * e^(slope*(z - z0)) at z0."""
        return cls([value * slope**k for k in range(order + 1)])

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    @property
    def value(self) -> Number:
        return self.terms[0]

    def derivative(self, k: int = 1) -> Number:
        return self.terms[k]

    def _coerce(self, other: Union["Jet", Number]) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order)

    def __add__(self, other: Union["Jet", Number]) -> "Jet":
        other = self._coerce(other)
        return Jet([a + b for a, b in zip(self.terms, other.terms)])

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet([-a for a in self.terms])

    def __sub__(self, other: Union["Jet", Number]) -> "Jet":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Number) -> "Jet":
        return (-self) + other

    def __mul__(self, other: Union["Jet", Number]) -> "Jet":
        if not isinstance(other, Jet):
            return Jet([a * other for a in self.terms])
        order = min(self.order, other.order)
        return Jet(
            [
                sum(math.comb(k, j) * self.terms[j] * other.terms[k - j] for j in range(k + 1))
                for k in range(order + 1)
            ]
        )

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Jet({', '.join(str(t) for t in self.terms)})"


def contour_radius(v: Number) -> float:
    return CONTOUR_RADIUS_FACTOR * min(1.0, float(v))


def contour_jet(
    func: Evaluator,
    center: Number,
    radius: Number,
    ctx: MPContext,
    order: int = 2,
    nodes: int = 64,
    max_nodes: int = MAX_CONTOUR_NODES,
) -> Jet:
    """Taylor jet of a function holomorphic on |z - center| <= radius, by the trapezoidal Cauchy integral."""
    samples: dict[Fraction, Number] = {}
    tolerance = ctx.ldexp(1, -(ctx.prec * 3 // 4))

    def sample(count: int) -> None:
        for j in range(count):
            key = Fraction(j, count)
            if key in samples:
                continue
            point = center + radius * ctx.expjpi(2 * ctx.mpf(key.numerator) / key.denominator)
            try:
                samples[key] = func(point)
            except PoleProximity as error:
                raise ContourThroughPole(f"contour node {point} hits a pole: {error}") from error

    def taylor(count: int) -> list[Number]:
        coefficients = []
        for k in range(order + 1):
            total = ctx.fsum(
                samples[Fraction(j, count)] * ctx.expjpi(-2 * ctx.mpf(k * j) / count) for j in range(count)
            )
            coefficients.append(total / count)
        return coefficients

    count = nodes
    sample(count)
    previous = taylor(count)
    while count < max_nodes:
        count *= 2
        sample(count)
        current = taylor(count)
        scale = max(abs(s) for s in samples.values()) or 1
        if all(abs(a - b) <= tolerance * scale for a, b in zip(current, previous)):
            logger.debug("contour jet converged with %d nodes", count)
            return Jet([current[k] * math.factorial(k) / radius**k for k in range(order + 1)])
        previous = current
    raise ContourThroughPole(f"contour integral did not converge with {max_nodes} nodes at radius {radius}")


def _evaluate(f: Evaluator, tau: Number) -> Number:
    try:
        return f(tau)
    except (PoleProximity, ContourThroughPole, PrecisionUnreachable) as error:
        raise StencilThroughSingularity(f"stencil point {tau} is not admissible: {error}") from error


def fd_partials(
    f: Evaluator, tau: Number, ctx: MPContext, h: float, second: bool = False
) -> dict[str, Estimate]:
    """Central differences in u = Re(tau) and v = Im(tau), one Richardson level."""
    step = ctx.mpf(h)
    if tau.imag - step <= 0:
        raise StencilThroughSingularity(f"stencil of step {h} leaves the upper half-plane at {tau}")
    center = _evaluate(f, tau) if second else None

    def differences(width: Number) -> dict[str, Number]:
        up, um = _evaluate(f, tau + width), _evaluate(f, tau - width)
        vp, vm = _evaluate(f, tau + ctx.mpc(0, width)), _evaluate(f, tau - ctx.mpc(0, width))
        result = {"u": (up - um) / (2 * width), "v": (vp - vm) / (2 * width)}
        if second:
            result["uu"] = (up - 2 * center + um) / width**2
            result["vv"] = (vp - 2 * center + vm) / width**2
        return result

    coarse, fine = differences(step), differences(step / 2)
    return {
        key: Estimate((4 * fine[key] - coarse[key]) / 3, abs(fine[key] - coarse[key]) / 3) for key in coarse
    }


def dtaubar_fd(f: Evaluator, tau: Number, ctx: MPContext, h: float) -> Estimate:
    """d/d(tau bar) = (d/du + i d/dv)/2."""
    partials = fd_partials(f, tau, ctx, h)
    value = (partials["u"].value + ctx.j * partials["v"].value) / 2
    return Estimate(value, (partials["u"].error + partials["v"].error) / 2)

import logging
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Final, Iterator, Union

from mpmath.ctx_mp import MPContext

from .exceptions import DomainViolation, NotUnimodular
from .numeric import (
    Estimate,
    Evaluator,
    Number,
    dtaubar_fd,
    fd_partials,
    rational,
    relative_residual,
    with_guard_bits,
)

logger = logging.getLogger(__name__)

DEFAULT_FD_STEP: Final[float] = 1e-4
DEFAULT_FD_STEP_LAPLACIAN: Final[float] = 1e-3


class GroupClass(str, Enum):
    GAMMA = "Gamma"
    GAMMA0_4 = "Gamma0_4"
    SL2Z = "SL2Z"


@dataclass(frozen=True)
class GroupElement:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        if self.a * self.d - self.b * self.c != 1:
            raise NotUnimodular(f"[[{self.a},{self.b}],[{self.c},{self.d}]] has determinant != 1")

    @classmethod
    def parse(cls, text: str) -> "GroupElement":
        try:
            a, b, c, d = (int(part.strip()) for part in text.split(","))
        except ValueError as error:
            raise NotUnimodular(f"expected 'a,b,c,d', got {text!r}") from error
        return cls(a, b, c, d)

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(1, 0, 0, 1)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __neg__(self) -> "GroupElement":
        return GroupElement(-self.a, -self.b, -self.c, -self.d)

    def act(self, tau: Number) -> Number:
        return (self.a * tau + self.b) / (self.c * tau + self.d)

    def automorphy(self, tau: Number) -> Number:
        return self.c * tau + self.d

    def __str__(self) -> str:
        return f"{self.a},{self.b},{self.c},{self.d}"


T: Final[GroupElement] = GroupElement(1, 1, 0, 1)
S: Final[GroupElement] = GroupElement(0, -1, 1, 0)


def group_membership(element: GroupElement) -> GroupClass:
    """Strictest of Gamma (4|c, c/4 = (d-1)/2 = b mod 2), Gamma0(4) and SL2(Z) containing the element."""
    if element.c % 4:
        return GroupClass.SL2Z
    if (element.c // 4 - (element.d - 1) // 2) % 2 == 0 and (element.b - element.c // 4) % 2 == 0:
        return GroupClass.GAMMA
    return GroupClass.GAMMA0_4


def in_gamma0_4(element: GroupElement) -> bool:
    return group_membership(element) in (GroupClass.GAMMA, GroupClass.GAMMA0_4)


def gcdex(a: int, b: int) -> tuple[int, int, int]:
    """(x, y, g) with g = gcd(a, b) and a*x + b*y == g."""
    if b == 0:
        return (-1, 0, -a) if a < 0 else (1, 0, a)
    quotient, remainder = divmod(a, b)
    x, y, g = gcdex(b, remainder)
    return y, x - y * quotient, g


def complete_row(c: int, d: int) -> GroupElement:
    """Some element with bottom row (c, d)."""
    x, y, g = gcdex(d, -c)
    if g != 1:
        raise NotUnimodular(f"bottom row ({c}, {d}) is not primitive")
    return GroupElement(x, y, c, d)


def random_gamma_elements(rng: random.Random, count: int, size: int = 6) -> Iterator[GroupElement]:
    produced = 0
    while produced < count:
        quarter = rng.randint(-size, size)
        d = 2 * rng.randint(-size, size) + 1
        if (quarter - (d - 1) // 2) % 2:
            continue
        try:
            element = complete_row(4 * quarter, d)
        except NotUnimodular:
            continue
        if (element.b - quarter) % 2:
            element = GroupElement(element.a + element.c, element.b + element.d, element.c, element.d)
        produced += 1
        yield element


def random_sl2z_elements(rng: random.Random, count: int, size: int = 9) -> Iterator[GroupElement]:
    produced = 0
    while produced < count:
        c, d = rng.randint(-size, size), rng.randint(-size, size)
        try:
            element = complete_row(c, d)
        except NotUnimodular:
            continue
        produced += 1
        yield element


def jacobi_symbol(a: int, n: int) -> int:
    if n <= 0 or n % 2 == 0:
        raise DomainViolation(f"the Jacobi symbol needs an odd positive modulus, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


@dataclass(frozen=True)
class MultiplierValue:
    """The root of unity e^(2 pi i turns), kept exact."""

    turns: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "turns", Fraction(self.turns) % 1)

    @classmethod
    def from_sign(cls, sign: int) -> "MultiplierValue":
        if sign not in (1, -1):
            raise DomainViolation(f"a symbol value of {sign} is not a unit")
        return cls(Fraction(0) if sign == 1 else Fraction(1, 2))

    def __mul__(self, other: "MultiplierValue") -> "MultiplierValue":
        return MultiplierValue(self.turns + other.turns)

    def __truediv__(self, other: "MultiplierValue") -> "MultiplierValue":
        return MultiplierValue(self.turns - other.turns)

    def __pow__(self, exponent: int) -> "MultiplierValue":
        return MultiplierValue(self.turns * exponent)

    def inverse(self) -> "MultiplierValue":
        return MultiplierValue(-self.turns)

    def value(self, ctx: MPContext) -> Number:
        return ctx.expjpi(2 * ctx.mpf(self.turns.numerator) / self.turns.denominator)

    def __str__(self) -> str:
        return f"e^(2 pi i * {self.turns})"


MultiplierProvider = Callable[[GroupElement], MultiplierValue]


def psi_multiplier(element: GroupElement) -> MultiplierValue:
    """Multiplier of eta: eta(M tau) = psi(M) (c tau + d)^(1/2) eta(tau), principal square root."""
    a, b, c, d = element.a, element.b, element.c, element.d
    if c % 2:
        symbol = jacobi_symbol(d, abs(c))
        argument = (a + d) * c - b * d * (c * c - 1) - 3 * c
    else:
        symbol = jacobi_symbol(c, abs(d))
        if c < 0 and d < 0:
            symbol = -symbol
        argument = a * c * (1 - d * d) + d * (b - c + 3) - 3
    return MultiplierValue.from_sign(symbol) * MultiplierValue(Fraction(argument, 24))


def _scaled(element: GroupElement, factor: int) -> GroupElement:
    if element.c % factor:
        raise DomainViolation(f"{element} has c not divisible by {factor}")
    return GroupElement(element.a, element.b * factor, element.c // factor, element.d)


def chi_multiplier(k: int, element: GroupElement) -> MultiplierValue:
    if element.c % 4:
        raise DomainViolation(f"chi_{k} is only defined for 4 | c, got {element}")
    if k == 1:
        return psi_multiplier(_scaled(element, 4)) ** 3
    if k == 2:
        if group_membership(element) is not GroupClass.GAMMA:
            raise DomainViolation(f"chi_2 is only defined on Gamma, got {element}")
        if element.c % 8 == 0:
            return MultiplierValue(Fraction(element.c, 32) + Fraction(element.d - 1, 8))
        return MultiplierValue(Fraction(1, 4) - Fraction(element.c, 32))
    if k == 3:
        return psi_multiplier(_scaled(element, 4)) / psi_multiplier(_scaled(element, 2)) ** 2
    if k == 4:
        return psi_multiplier(_scaled(element, 2)) ** 5 / (
            psi_multiplier(element) ** 2 * psi_multiplier(_scaled(element, 4)) ** 2
        )
    raise DomainViolation(f"there is no chi_{k}")


def phat_multiplier(element: GroupElement) -> MultiplierValue:
    if group_membership(element) is not GroupClass.GAMMA:
        raise DomainViolation(f"{element} is not in Gamma")
    return MultiplierValue(Fraction(element.c, 16))


def hhat_multiplier(element: GroupElement) -> MultiplierValue:
    """psi^-3 e^(-pi i (ab + cd/4)/2)."""
    if element.c % 4:
        raise DomainViolation(f"{element} has c not divisible by 4")
    extra = Fraction(-(element.a * element.b + element.c * element.d // 4), 4)
    return psi_multiplier(element) ** -3 * MultiplierValue(extra)


def automorphy_factor(
    element: GroupElement, tau: Number, weight: Union[int, Fraction], ctx: MPContext
) -> Number:
    """(c tau + d)^weight on the principal branch."""
    weight = Fraction(weight)
    base = element.automorphy(tau)
    if weight.denominator == 1:
        return base**weight.numerator
    if weight.denominator != 2:
        raise DomainViolation(f"weight {weight} is neither integral nor half-integral")
    return ctx.sqrt(base) ** weight.numerator


def weight_transform_residual(
    f: Callable[[Number, MPContext], Number],
    weight: Union[int, Fraction],
    multiplier: MultiplierProvider,
    element: GroupElement,
    tau: Number,
    ctx: MPContext,
    guard_bits: int = 64,
) -> Number:
    """|f(M tau) - mult(M) (c tau + d)^k f(tau)| / max(|f(M tau)|, |f(tau)|)."""
    work = with_guard_bits(ctx, guard_bits)
    point = work.mpc(tau)
    image = f(element.act(point), work)
    expected = multiplier(element).value(work) * automorphy_factor(element, point, weight, work)
    expected *= f(point, work)
    residual = relative_residual(image, expected, work)
    logger.debug("weight %s law under %s at %s: residual %s", weight, element, tau, work.nstr(residual, 5))
    return ctx.mpf(residual)


def lowering_fd(f: Evaluator, tau: Number, ctx: MPContext, h: float = DEFAULT_FD_STEP) -> Estimate:
    """L = -2 i v^2 d/d(tau bar)."""
    derivative = dtaubar_fd(f, tau, ctx, h)
    factor = -2 * ctx.j * tau.imag**2
    return Estimate(factor * derivative.value, abs(factor) * derivative.error)


def xi_fd(
    f: Evaluator, weight: Union[int, Fraction], tau: Number, ctx: MPContext, h: float = DEFAULT_FD_STEP
) -> Estimate:
    """xi_k = 2 i v^k conj(d/d(tau bar))."""
    derivative = dtaubar_fd(f, tau, ctx, h)
    factor = 2 * ctx.j * tau.imag ** rational(ctx, weight)
    return Estimate(factor * ctx.conj(derivative.value), abs(factor) * derivative.error)


def laplacian_fd(
    f: Evaluator,
    weight: Union[int, Fraction],
    tau: Number,
    ctx: MPContext,
    h: float = DEFAULT_FD_STEP_LAPLACIAN,
) -> Estimate:
    """Delta_k = -v^2 (d_u^2 + d_v^2) + i k v (d_u + i d_v)."""
    partials = fd_partials(f, tau, ctx, h, second=True)
    v = tau.imag
    k = rational(ctx, weight)
    value = -(v**2) * (partials["uu"].value + partials["vv"].value) + ctx.j * k * v * (
        partials["u"].value + ctx.j * partials["v"].value
    )
    error = v**2 * (partials["uu"].error + partials["vv"].error) + abs(k) * v * (
        partials["u"].error + partials["v"].error
    )
    return Estimate(value, error)

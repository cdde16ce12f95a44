import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Final, Optional

from mpmath.ctx_mp import MPContext

from .exactalg import (
    EXACT,
    I,
    ONE,
    Cyc8,
    JacobiSeries,
    Monomial,
    QSeries,
    Rational,
    expand_with_slack,
    jacobi_qpochhammer,
    qpochhammer,
)
from .exceptions import (
    DivisionByZero,
    LatticeMismatch,
    NonExpandableDenominator,
    NonInvertibleLeadingTerm,
    RootOfUnityOutsideCyc8,
)
from .models import Finding, RunParams, VerificationReport, mismatch_finding
from .modular import GroupElement, automorphy_factor, psi_multiplier
from .numeric import Jet, Number, qpochhammer_numeric, rational, relative_residual, summation_window

logger = logging.getLogger(__name__)

TORSION_DENOMINATOR: Final[int] = 4

_ETA_TOKEN = re.compile(r"^eta\(\s*(\d+)\s*\)(?:\^\{?(-?\d+)\}?)?$")
_Q_TOKEN = re.compile(r"^q\^\{?\(?(-?\d+(?:/\d+)?)\)?\}?$")
_NUMBER_TOKEN = re.compile(r"^-?\d+(?:/\d+)?$")
_OPERATOR = re.compile(r"\s*([*/])\s*(?![^({]*[)}])")


@dataclass(frozen=True)
class TorsionPoint:
    """z = a*tau + b."""

    a: Fraction
    b: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if TORSION_DENOMINATOR % self.a.denominator:
            raise LatticeMismatch(
                f"torsion coefficient a={self.a} has denominator beyond {TORSION_DENOMINATOR}"
            )
        if TORSION_DENOMINATOR % self.b.denominator:
            raise RootOfUnityOutsideCyc8(
                f"torsion coefficient b={self.b} has denominator beyond {TORSION_DENOMINATOR}"
            )

    @classmethod
    def parse(cls, text: str) -> "TorsionPoint":
        a, b = (Fraction(part.strip()) for part in text.split(","))
        return cls(a, b)

    def __add__(self, other: "TorsionPoint") -> "TorsionPoint":
        return TorsionPoint(self.a + other.a, self.b + other.b)

    def __neg__(self) -> "TorsionPoint":
        return TorsionPoint(-self.a, -self.b)

    def shift(self, lam: int, mu: Rational = 0) -> "TorsionPoint":
        return TorsionPoint(self.a + lam, self.b + mu)

    def zeta(self) -> Monomial:
        """e^(2 pi i z) as a q-monomial."""
        return Monomial(Cyc8.root_of_unity(self.b), self.a)

    def zeta_power(self, exponent: Rational) -> Monomial:
        exponent = Fraction(exponent)
        return Monomial(Cyc8.root_of_unity(self.b * exponent), self.a * exponent)

    def to_complex(self, tau: Number, ctx: MPContext) -> Number:
        return rational(ctx, self.a) * tau + rational(ctx, self.b)

    def __str__(self) -> str:
        return f"{self.a}*tau+{self.b}"


def eta_series(order: Rational) -> QSeries:
    """q^(1/24) (q;q)_inf to O(q^order)."""
    shift = Fraction(1, 24)
    return qpochhammer(Monomial(ONE, 1), EXACT, Fraction(order) - shift).shift(shift)


def eta_numeric(tau: Number, ctx: MPContext) -> Number:
    return ctx.expjpi(tau / 12) * qpochhammer_numeric(ctx.expjpi(2 * tau), ctx)


@dataclass(frozen=True)
class EtaQuotient:
    """prefactor * prod eta(m tau)^r."""

    factors: tuple[tuple[int, int], ...]
    prefactor: Monomial = Monomial()

    def __post_init__(self) -> None:
        merged: dict[int, int] = {}
        for scale, power in self.factors:
            if scale <= 0:
                raise ValueError(f"eta scale must be positive, got {scale}")
            merged[scale] = merged.get(scale, 0) + power
        object.__setattr__(self, "factors", tuple(sorted((m, r) for m, r in merged.items() if r)))

    @classmethod
    def parse(cls, text: str) -> "EtaQuotient":
        factors: list[tuple[int, int]] = []
        prefactor = Monomial()
        pieces = _OPERATOR.split(text.strip())
        operators = ["*"] + pieces[1::2]
        for operator, token in zip(operators, pieces[0::2]):
            sign = 1 if operator == "*" else -1
            token = token.replace(" ", "")
            if match := _ETA_TOKEN.match(token):
                factors.append((int(match.group(1)), sign * int(match.group(2) or 1)))
            elif match := _Q_TOKEN.match(token):
                prefactor = prefactor * Monomial(ONE, sign * Fraction(match.group(1)))
            elif _NUMBER_TOKEN.match(token):
                value = Fraction(token)
                prefactor = prefactor * Monomial(Cyc8(value if sign > 0 else 1 / value))
            else:
                raise ValueError(f"cannot parse eta quotient token {token!r} in {text!r}")
        return cls(tuple(factors), prefactor)

    @property
    def leading_exponent(self) -> Fraction:
        return sum((Fraction(m * r, 24) for m, r in self.factors), Fraction(0)) + self.prefactor.q_exp

    def series(self, order: Rational) -> QSeries:
        order = Fraction(order)
        lead = self.leading_exponent
        inner_order = order - lead
        if inner_order <= 0:
            return QSeries.zero(order)
        result = QSeries.one(inner_order)
        for scale, power in self.factors:
            factor = qpochhammer(Monomial(ONE, scale), EXACT, inner_order, step=scale) ** abs(power)
            result = result * (factor if power > 0 else factor.invert(inner_order))
        return result.shift(lead).scale(self.prefactor.coef)

    def numeric(self, tau: Number, ctx: MPContext) -> Number:
        value = self.prefactor.coef.to_complex(ctx)
        value *= ctx.expjpi(2 * rational(ctx, self.prefactor.q_exp) * tau)
        for scale, power in self.factors:
            value *= eta_numeric(scale * tau, ctx) ** power
        return value

    def __str__(self) -> str:
        head = []
        if self.prefactor.coef != ONE:
            head.append(f"({self.prefactor.coef})")
        if self.prefactor.q_exp:
            head.append(f"q^{{{self.prefactor.q_exp}}}")
        numerator = [f"eta({m})^{r}" for m, r in self.factors if r > 0]
        denominator = [f"eta({m})^{-r}" for m, r in self.factors if r < 0]
        text = " * ".join(head + numerator) or "1"
        return " / ".join([text] + denominator)


def theta_series_at_torsion(z: TorsionPoint, order: Rational) -> QSeries:
    """theta(a tau + b) = sum_{n in 1/2+Z} q^(n^2/2 + a n) e^(2 pi i n (b + 1/2))."""
    order = Fraction(order)
    terms: dict[Fraction, Cyc8] = {}
    radius = math.sqrt(float(2 * order + z.a * z.a)) + 1 if 2 * order + z.a * z.a > 0 else 0
    low, high = math.floor(-z.a - radius) - 1, math.ceil(-z.a + radius) + 1
    for m in range(low, high + 1):
        n = Fraction(2 * m + 1, 2)
        exponent = n * n / 2 + z.a * n
        if exponent < order:
            terms[exponent] = terms.get(exponent, Cyc8()) + Cyc8.root_of_unity(n * (z.b + Fraction(1, 2)))
    return QSeries.from_terms(terms, order)


def theta_shift_factor(z: TorsionPoint, lam: int, mu: int) -> Monomial:
    """theta(z + lam tau + mu) = factor * theta(z)."""
    sign = Cyc8(-1 if (lam + mu) % 2 else 1)
    return Monomial(sign) * Monomial(ONE, Fraction(-lam * lam, 2)) * z.zeta_power(-lam)


def theta_numeric(z: Number, tau: Number, ctx: MPContext) -> Number:
    return theta_jet(z, tau, ctx, order=0).value


def theta_jet(z: Number, tau: Number, ctx: MPContext, order: int = 2) -> Jet:
    """theta and its z-derivatives, summed termwise over n in 1/2 + Z."""
    v = tau.imag
    window = summation_window(ctx, v, -z.imag / v - ctx.mpf(1) / 2)
    shifted = z + ctx.mpf(1) / 2
    sums: list[list[Number]] = [[] for _ in range(order + 1)]
    for m in window:
        n = m + ctx.mpf(1) / 2
        term = ctx.expjpi(n * n * tau + 2 * n * shifted)
        slope = 2 * ctx.pi * ctx.j * n
        for k in range(order + 1):
            sums[k].append(term)
            term = term * slope
    return Jet([ctx.fsum(parts) for parts in sums])


def theta_transform_check(element: GroupElement, z: Number, tau: Number, ctx: MPContext) -> Number:
    """Residual of theta(z/(c tau + d); M tau) = psi^3 (c tau + d)^(1/2) e^(pi i c z^2/(c tau + d)) theta."""
    factor = element.automorphy(tau)
    left = theta_numeric(z / factor, element.act(tau), ctx)
    right = (
        (psi_multiplier(element) ** 3).value(ctx)
        * automorphy_factor(element, tau, Fraction(1, 2), ctx)
        * ctx.expjpi(element.c * z * z / factor)
        * theta_numeric(z, tau, ctx)
    )
    return relative_residual(left, right, ctx)


def finite_jtp_finding(n: int, order: Rational) -> Finding:
    """(zeta, zeta^-1 q)_n / (q)_2n = sum_{|j|<=n} (-1)^j zeta^j q^(j(j-1)/2) / ((q)_(n-j) (q)_(n+j))."""
    order = Fraction(order)
    left = jacobi_qpochhammer(Monomial(ONE, 0, 1), n, order)
    left = left * jacobi_qpochhammer(Monomial(ONE, 1, -1), n, order)
    for k in range(1, 2 * n + 1):
        left = left.div_q_binomial(ONE, k)
    right: Optional[JacobiSeries] = None
    for j in range(-n, n + 1):
        inverse = (
            qpochhammer(Monomial(ONE, 1), n - j, order).invert(order)
            * qpochhammer(Monomial(ONE, 1), n + j, order).invert(order)
        )
        term = JacobiSeries.from_qseries(inverse).shift(Fraction(j * (j - 1), 2), j)
        term = term.scale(-1 if j % 2 else 1)
        right = term if right is None else right + term
    return mismatch_finding(f"n={n}", left.first_mismatch(right))


def finite_jtp_check(n: int, order: Rational) -> VerificationReport:
    finding = finite_jtp_finding(n, order)
    return VerificationReport.from_findings("finite-jtp", RunParams(order=int(order)), [finding])


def _negative_mass(first: Fraction) -> Fraction:
    """sum of -(first + k) over k >= 0 with first + k < 0."""
    return sum((-(first + k) for k in range(max(0, math.ceil(-first)))), Fraction(0))


def basic_hypergeometric_sum(
    numerators: list[Monomial], denominators: list[Monomial], argument: Monomial, order: Rational
) -> QSeries:
    """sum_n prod (num; q)_n / (prod (den; q)_n (q; q)_n) * argument^n to O(q^order)."""
    if argument.q_exp <= 0:
        raise NonExpandableDenominator(f"the argument {argument} needs a positive q-power for a formal sum")
    order = Fraction(order)
    slack = sum((_negative_mass(m.q_exp) for m in numerators), Fraction(0))
    term = QSeries.one(order + slack)
    total = QSeries.zero(order)
    n = 0
    try:
        while n * argument.q_exp - slack < order:
            total = total + term
            for m in numerators:
                term = term.mul_binomial(m.coef, m.q_exp + n)
            for m in denominators:
                term = term.div_binomial(m.coef, m.q_exp + n)
            term = term.div_binomial(ONE, n + 1).shift(argument.q_exp).scale(argument.coef)
            n += 1
    except DivisionByZero as error:
        raise NonExpandableDenominator(f"a denominator factor vanishes at n={n}") from error
    logger.debug("basic hypergeometric sum used %d terms for O(q^%s)", n, order)
    return total.truncate(order)


def _heine_sides(
    a: Monomial, b: Monomial, c: Monomial, z: Monomial, order: Rational
) -> tuple[QSeries, QSeries]:
    ratio = c / b
    if ratio.q_exp <= 0:
        raise NonExpandableDenominator(f"c/b = {ratio} needs a positive q-power")
    left = basic_hypergeometric_sum([a, b], [c], z, order)

    def build(work: Fraction) -> QSeries:
        prefactor = (
            qpochhammer(ratio, EXACT, work)
            * qpochhammer(b * z, EXACT, work)
            * (qpochhammer(c, EXACT, work) * qpochhammer(z, EXACT, work)).invert(work)
        )
        return prefactor * basic_hypergeometric_sum([a * b * z / c, b], [b * z], ratio, work)

    try:
        right = expand_with_slack(build, order)
    except (DivisionByZero, NonInvertibleLeadingTerm) as error:
        raise NonExpandableDenominator(f"Heine's right-hand side is not expandable: {error}") from error
    return left, right


def heine_finding(a: Monomial, b: Monomial, c: Monomial, z: Monomial, order: Rational) -> Finding:
    left, right = _heine_sides(a, b, c, z, order)
    label = f"a={a.coef}q^{a.q_exp}, b={b.coef}q^{b.q_exp}, c={c.coef}q^{c.q_exp}, z={z.coef}q^{z.q_exp}"
    return mismatch_finding(label, left.first_mismatch(right))


def heine_check(a: Monomial, b: Monomial, c: Monomial, z: Monomial, order: Rational) -> VerificationReport:
    finding = heine_finding(a, b, c, z, order)
    return VerificationReport.from_findings("heine", RunParams(order=int(order)), [finding])


def heine_parameters(j: int) -> tuple[Monomial, Monomial, Monomial, Monomial]:
    """The specialization a = i q^(j+1/2), b = -i q^(j+1/2), c = q^(2j+1), z = q."""
    half = j + Fraction(1, 2)
    return Monomial(I, half), Monomial(-I, half), Monomial(ONE, 2 * j + 1), Monomial(ONE, 1)


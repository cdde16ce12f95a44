import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Final, Iterator, Mapping, Optional, Sequence, Union

from mpmath.ctx_mp import MPContext

from .appell import (
    R_jet,
    R_numeric,
    dtaubar_R_numeric,
    dz_dtaubar_R_numeric,
    mu_hat_numeric,
    mu_numeric,
    theta_mu_jet,
)
from .classical import TorsionPoint, eta_numeric, theta_jet, theta_numeric
from .combinatorics import DEFAULT_ENUMERATION_CAP, Family, Side, census_series, genfun
from .exactalg import (
    EXACT,
    I,
    ONE,
    Cyc8,
    JacobiSeries,
    Monomial,
    QSeries,
    Rational,
    SupportBound,
    expand_with_slack,
    qpochhammer,
)
from .exceptions import DomainViolation, PoleProximity, PrecisionUnreachable, UnboundedCone
from .modular import GroupElement, automorphy_factor, hhat_multiplier, psi_multiplier
from .models import Finding, RunParams, VerificationReport, mismatch_finding
from .numeric import (
    MAX_WINDOW_TERMS,
    WINDOW_MARGIN_BITS,
    Jet,
    Number,
    UHPoint,
    contour_jet,
    contour_radius,
    make_context,
    rational,
    relative_residual,
)

logger = logging.getLogger(__name__)

Scalar = Union[Fraction, float]

PBAR_ROUTES: Final[tuple[str, ...]] = ("definition", "triple_sum", "oracle", "g_derivative", "zeta_limit")
DEFAULT_PWZ_WINDOW: Final[tuple[int, int]] = (-25, 25)
FALLBACK_SLOPE: Final[Fraction] = Fraction(1, 8)


@dataclass(frozen=True)
class Cone:
    """Index vectors start + direction * t, t >= 0 componentwise, counted with a sign."""

    start: tuple[int, ...]
    direction: int = 1
    sign: int = 1

    def __post_init__(self) -> None:
        if self.direction not in (1, -1):
            raise DomainViolation(f"a cone direction is +1 or -1, got {self.direction}")

    def index(self, t: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(s + self.direction * step for s, step in zip(self.start, t))


@dataclass(frozen=True)
class JacobiArgument:
    """zeta_i = zeta^zeta_exp * e^(2 pi i (a tau + b)) for the exact expansion."""

    zeta_exp: Fraction = Fraction(0)
    point: TorsionPoint = TorsionPoint(0, 0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "zeta_exp", Fraction(self.zeta_exp))


@dataclass(frozen=True)
class ConeSumSpec:
    """coefficient * prod zeta_i^powers[i] * sum over cones of
    sign * weight(x) * e^(2 pi i parity.x) q^(Q(x) + linear.x + constant) prod zeta_i^x_i

    with Q(x) = sum_{i<=j} quadratic[i, j] x_i x_j.
    """

    quadratic: Mapping[tuple[int, int], Fraction]
    linear: tuple[Fraction, ...]
    cones: tuple[Cone, ...]
    constant: Fraction = Fraction(0)
    powers: tuple[Fraction, ...] = ()
    parity: tuple[Fraction, ...] = ()
    coefficient: Cyc8 = ONE
    weight: Optional[Callable[[tuple[int, ...]], int]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        size = len(self.linear)
        object.__setattr__(self, "linear", tuple(Fraction(value) for value in self.linear))
        object.__setattr__(self, "constant", Fraction(self.constant))
        object.__setattr__(
            self, "quadratic", {tuple(sorted(key)): Fraction(value) for key, value in self.quadratic.items()}
        )
        for name in ("powers", "parity"):
            values = getattr(self, name) or (0,) * size
            object.__setattr__(self, name, tuple(Fraction(value) for value in values))
        object.__setattr__(self, "coefficient", Cyc8.coerce(self.coefficient))
        if any(len(values) != size for values in (self.powers, self.parity)):
            raise DomainViolation("every per-variable field needs one entry per summation variable")
        if any(len(cone.start) != size for cone in self.cones):
            raise DomainViolation("cone starts must have one entry per summation variable")
        for cone in self.cones:
            _cone_form(self.quadratic, self.linear, self.constant, cone).validate(cone)

    @property
    def dimension(self) -> int:
        return len(self.linear)

    def exponent(self, x: tuple[int, ...]) -> Fraction:
        quadratic = sum((value * x[i] * x[j] for (i, j), value in self.quadratic.items()), Fraction(0))
        return quadratic + sum((a * b for a, b in zip(self.linear, x)), Fraction(0)) + self.constant

    def with_linear(self, shift: Sequence[Rational]) -> "ConeSumSpec":
        """The same sum with q^(shift.x) inserted."""
        return ConeSumSpec(
            self.quadratic,
            tuple(a + Fraction(b) for a, b in zip(self.linear, shift)),
            self.cones,
            self.constant,
            self.powers,
            self.parity,
            self.coefficient,
            self.weight,
        )

    def term_weight(self, x: tuple[int, ...]) -> int:
        return self.weight(x) if self.weight is not None else 1


@dataclass(frozen=True)
class _ConeForm:
    """The exponent on a cone in its own coordinates: sum_{i<=j} A_ij t_i t_j + B.t + C, t >= 0."""

    quadratic: tuple[tuple[Scalar, ...], ...]
    linear: tuple[Scalar, ...]
    constant: Scalar

    def validate(self, cone: Cone) -> None:
        size = len(self.linear)
        for i in range(size):
            for j in range(i, size):
                if self.quadratic[i][j] < 0:
                    raise UnboundedCone(f"cone at {cone.start}: negative coefficient of t{i}*t{j}")
            if self.quadratic[i][i] == 0 and self.linear[i] <= 0:
                raise UnboundedCone(f"cone at {cone.start}: the exponent does not grow along t{i}")

    def minimum(self) -> Scalar:
        """A lower bound of the exponent on the whole cone."""
        total = self.constant
        for i, b in enumerate(self.linear):
            if b < 0:
                total -= b * b / (4 * self.quadratic[i][i])
        return total

    def points(self, bound: Scalar) -> Iterator[tuple[tuple[int, ...], Scalar]]:
        """Every t with exponent < bound, with its exponent."""
        yield from self._visit((), self.constant, bound)

    def _visit(
        self, prefix: tuple[int, ...], partial: Scalar, bound: Scalar
    ) -> Iterator[tuple[tuple[int, ...], Scalar]]:
        i, size = len(prefix), len(self.linear)
        if i == size:
            if partial < bound:
                yield prefix, partial
            return
        rows = self.quadratic
        betas = [self.linear[j] + sum(rows[k][j] * prefix[k] for k in range(i)) for j in range(i, size)]
        square, slope = rows[i][i], betas[0]
        t = 0
        while True:
            value = partial + square * t * t + slope * t
            floor = value
            for offset, j in enumerate(range(i + 1, size), start=1):
                beta = betas[offset] + rows[i][j] * t
                if beta < 0:
                    floor -= beta * beta / (4 * rows[j][j])
            if floor < bound:
                yield from self._visit(prefix + (t,), value, bound)
            elif 2 * square * t + slope >= 0:
                return
            t += 1


def _cone_form(
    quadratic: Mapping[tuple[int, int], Scalar], linear: Sequence[Scalar], constant: Scalar, cone: Cone
) -> _ConeForm:
    size = len(linear)
    rows: list[list[Scalar]] = [[0] * size for _ in range(size)]
    for (i, j), value in quadratic.items():
        rows[i][j] = rows[j][i] = value
    start = cone.start
    gradient = [
        linear[i] + 2 * rows[i][i] * start[i] + sum(rows[i][j] * start[j] for j in range(size) if j != i)
        for i in range(size)
    ]
    value = sum(rows[i][j] * start[i] * start[j] for i in range(size) for j in range(i, size))
    value += sum(linear[i] * start[i] for i in range(size)) + constant
    return _ConeForm(
        tuple(tuple(row) for row in rows), tuple(cone.direction * g for g in gradient), value
    )


def _support_bound(
    forms: list[tuple[Cone, _ConeForm]], zeta: Sequence[Fraction], offset: Fraction, side: int
) -> SupportBound:
    """side*r <= slope*m + h on every term, from m >= C + sum_i (A_ii t_i^2 + B_i t_i)."""
    rates = []
    for cone, form in forms:
        rho = [side * cone.direction * e for e in zeta]
        start = side * (sum((e * s for e, s in zip(zeta, cone.start)), Fraction(0)) + offset)
        rates.append((form, rho, start))
    slope = Fraction(0)
    for form, rho, _ in rates:
        for i, rate in enumerate(rho):
            if rate > 0 and form.quadratic[i][i] == 0:
                slope = max(slope, rate / form.linear[i])
    if slope == 0 and any(rate > 0 for _, rho, _ in rates for rate in rho):
        slope = FALLBACK_SLOPE
    best: Optional[Fraction] = None
    for form, rho, start in rates:
        h = start - slope * form.constant
        for i, rate in enumerate(rho):
            excess = rate - slope * form.linear[i]
            if excess > 0:
                h += excess * excess / (4 * slope * form.quadratic[i][i])
        best = h if best is None else max(best, h)
    return SupportBound(slope, best if best is not None else 0)


def cone_sum_series(
    spec: ConeSumSpec, order: Rational, arguments: Optional[Sequence[JacobiArgument]] = None
) -> JacobiSeries:
    """The cone sum as a Jacobi series in one zeta to O(q^order), every zeta_i specialized by arguments."""
    order = Fraction(order)
    arguments = list(arguments) if arguments is not None else [JacobiArgument()] * spec.dimension
    if len(arguments) != spec.dimension:
        raise DomainViolation(f"expected {spec.dimension} Jacobi arguments, got {len(arguments)}")
    linear = [a + arg.point.a for a, arg in zip(spec.linear, arguments)]
    constant = spec.constant + sum((p * arg.point.a for p, arg in zip(spec.powers, arguments)), Fraction(0))
    zeta = [arg.zeta_exp for arg in arguments]
    zeta_offset = sum((p * arg.zeta_exp for p, arg in zip(spec.powers, arguments)), Fraction(0))
    turns = [parity + arg.point.b for parity, arg in zip(spec.parity, arguments)]
    turn_offset = sum((p * arg.point.b for p, arg in zip(spec.powers, arguments)), Fraction(0))

    terms = []
    forms = []
    for cone in spec.cones:
        form = _cone_form(spec.quadratic, linear, constant, cone)
        form.validate(cone)
        forms.append((cone, form))
        count = 0
        for t, exponent in form.points(order):
            x = cone.index(t)
            count += 1
            weight = spec.term_weight(x)
            if not weight:
                continue
            phase = sum((b * k for b, k in zip(turns, x)), turn_offset)
            coefficient = spec.coefficient * Cyc8(cone.sign * weight) * Cyc8.root_of_unity(phase)
            terms.append((exponent, sum((e * k for e, k in zip(zeta, x)), zeta_offset), coefficient))
        logger.debug("cone at %s: %d index vectors below q^%s", cone.start, count, order)
    upper = _support_bound(forms, zeta, zeta_offset, 1)
    lower = _support_bound(forms, zeta, zeta_offset, -1)
    return JacobiSeries.from_terms(terms, order, upper=upper, lower=lower)


def cone_sum_numeric(spec: ConeSumSpec, ws: Sequence[Number], tau: Number, ctx: MPContext) -> Number:
    """The cone sum at zeta_i = e^(2 pi i w_i), summed until the terms drop below the working precision."""
    if len(ws) != spec.dimension:
        raise DomainViolation(f"expected {spec.dimension} elliptic variables, got {len(ws)}")
    v = float(tau.imag)
    shifts = [float(w.imag) / v for w in ws]
    quadratic = {key: float(value) for key, value in spec.quadratic.items()}
    linear = [float(a) + shift for a, shift in zip(spec.linear, shifts)]
    forms = []
    for cone in spec.cones:
        form = _cone_form(quadratic, linear, float(spec.constant), cone)
        form.validate(cone)
        forms.append((cone, form))
    budget = min(form.minimum() for _, form in forms)
    budget += (ctx.prec + WINDOW_MARGIN_BITS) * math.log(2) / (2 * math.pi * v)
    terms = []
    for cone, form in forms:
        for t, _ in form.points(budget):
            x = cone.index(t)
            weight = spec.term_weight(x)
            if not weight:
                continue
            if len(terms) >= MAX_WINDOW_TERMS:
                raise PrecisionUnreachable(
                    f"the cone sum needs more than {MAX_WINDOW_TERMS} terms at v={v:.3g}"
                )
            phase = rational(ctx, spec.exponent(x)) * tau
            phase += rational(ctx, sum((b * k for b, k in zip(spec.parity, x)), Fraction(0)))
            phase += ctx.fsum((k + rational(ctx, p)) * w for k, p, w in zip(x, spec.powers, ws))
            terms.append(cone.sign * weight * ctx.expjpi(2 * phase))
    logger.debug("numeric cone sum used %d terms", len(terms))
    return spec.coefficient.to_complex(ctx) * ctx.fsum(terms)


def _j_weight(x: tuple[int, ...]) -> int:
    return x[1]


_TWO_CONES: Final = (Cone((1, 0, 0), 1), Cone((0, -1, -1), -1))

F_SPEC: Final[ConeSumSpec] = ConeSumSpec(
    quadratic={(0, 0): Fraction(1, 2), (0, 1): 1, (0, 2): 1, (1, 2): 1},
    linear=(Fraction(1, 2), 0, 0),
    cones=_TWO_CONES,
    constant=Fraction(-1, 8),
    powers=(Fraction(-1, 2), Fraction(1, 2), Fraction(1, 2)),
    parity=(Fraction(1, 2), 0, 0),
)

G_SPEC: Final[ConeSumSpec] = ConeSumSpec(
    quadratic={(0, 0): Fraction(1, 2), (0, 1): 2, (0, 2): 2, (1, 2): 4},
    linear=(Fraction(1, 2), 0, 0),
    cones=_TWO_CONES,
    constant=Fraction(-1, 8),
    powers=(Fraction(-1, 2), Fraction(1, 4), Fraction(1, 4)),
    parity=(Fraction(1, 2), 0, 0),
    coefficient=Cyc8(4),
)

# variables (n, j, l): j (-1)^(j+n+l) q^(j(j+1)/2 + 2nj + 2lj + 4nl + n + l) over n,j,l >= 0 and n,j,l < 0
PBAR_SPEC: Final[ConeSumSpec] = ConeSumSpec(
    quadratic={(1, 1): Fraction(1, 2), (0, 1): 2, (1, 2): 2, (0, 2): 4},
    linear=(1, Fraction(1, 2), 1),
    cones=(Cone((0, 0, 0), 1), Cone((-1, -1, -1), -1)),
    parity=(Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)),
    weight=_j_weight,
)

HALF_PERIOD: Final[TorsionPoint] = TorsionPoint(1, Fraction(1, 2))


def _inverse_eta_product_cubed(order: Fraction) -> QSeries:
    return (qpochhammer(Monomial(ONE, 1), EXACT, order) ** 3).invert(order)


def _pbar_triple_sum(order: Fraction) -> QSeries:
    plain = cone_sum_series(PBAR_SPEC, order)
    shifted = cone_sum_series(PBAR_SPEC.with_linear((0, 1, 0)), order)
    return -(plain - shifted).zeta_coefficient(0) * _inverse_eta_product_cubed(order)


def _pbar_g_derivative(order: Fraction) -> QSeries:
    arguments = [JacobiArgument(1), JacobiArgument(0, HALF_PERIOD), JacobiArgument(0, HALF_PERIOD)]
    prefactor = Monomial(I / 4, Fraction(-3, 8)).to_series(order + 1)

    def build(work: Fraction) -> QSeries:
        series = cone_sum_series(G_SPEC, work, arguments).shift(0, Fraction(1, 2))
        return series.dzeta_at("one") - series.dzeta_at("q")

    difference = expand_with_slack(build, order + Fraction(3, 8))
    return (difference * prefactor).truncate(order) * _inverse_eta_product_cubed(order)


def _pbar_zeta_limit(order: Fraction) -> QSeries:
    quotient = pwz_double_sum(order).divide_one_minus_zeta()
    return quotient.substitute(Monomial()) * _inverse_eta_product_cubed(order)


def pbar_omega_series(
    order: Rational, method: str = "triple_sum", cap: int = DEFAULT_ENUMERATION_CAP
) -> QSeries:
    """The generating function of pbar_omega(n) to O(q^order) by the selected route."""
    order = Fraction(order)
    if method not in PBAR_ROUTES:
        raise DomainViolation(f"unknown route {method!r}, expected one of {', '.join(PBAR_ROUTES)}")
    if order <= 1:
        return QSeries.zero(max(order, Fraction(0)))
    logger.debug("pbar_omega to O(q^%s) via %s", order, method)
    if method == "definition":
        return genfun(Family.PBAR_OMEGA, order)
    if method == "oracle":
        return census_series(Family.PBAR_OMEGA, math.ceil(order) - 1, cap).truncate(order)
    if method == "g_derivative":
        return _pbar_g_derivative(order)
    if method == "zeta_limit":
        return _pbar_zeta_limit(order)
    return _pbar_triple_sum(order)


def family_series(family: Family, order: Rational, side: Side = Side.DEFINITION) -> QSeries:
    """genfun for every family, with the triple sum as the appell side of pbar_omega."""
    if family is Family.PBAR_OMEGA and side is Side.APPELL:
        return pbar_omega_series(order, "triple_sum")
    return genfun(family, order, side)


def pstar_series(order: Rational) -> JacobiSeries:
    """(q)_inf (zeta, zeta^-1 q)_inf Pbar_omega(zeta; q) from its q-factorial definition."""
    order = Fraction(order)
    total = JacobiSeries.from_terms([], order)
    term = JacobiSeries.one(order)
    n = 1
    while n < order:
        term = term.mul_binomial(ONE, n - 1, 1).mul_binomial(ONE, n, -1).mul_binomial(-1, 2 * n - 1)
        term = term.shift(1).div_q_binomial(ONE, 2 * n - 1).div_q_binomial(ONE, 2 * n).truncate(order)
        total = total + term
        n += 1
    prefactor = qpochhammer(Monomial(ONE, 1), EXACT, order) ** 2
    prefactor = prefactor * qpochhammer(Monomial(-1, 1), EXACT, order, step=2).invert(order)
    return (total * prefactor).truncate(order)


def pwz_double_sum(order: Rational) -> JacobiSeries:
    """sum_{j>=1, n>=0} (-1)^(j+1) i^n (1 - zeta^j)(1 - zeta^-j q^j) q^(j(j+1)/2 + n(j+1/2))
    / (1 + i q^(j+n+1/2)),
    with the denominator expanded geometrically."""
    order = Fraction(order)
    terms = []
    j = 1
    while Fraction(j * (j + 1), 2) < order:
        n = 0
        while Fraction(j * (j + 1), 2) + n * (j + Fraction(1, 2)) < order:
            base = Fraction(j * (j + 1), 2) + n * (j + Fraction(1, 2))
            ell = 0
            while base + ell * (j + n + Fraction(1, 2)) < order:
                exponent = base + ell * (j + n + Fraction(1, 2))
                coefficient = Cyc8(-1 if j % 2 == 0 else 1) * Cyc8.zeta8(2 * (n - ell))
                terms.append((exponent, 0, coefficient))
                terms.append((exponent, j, -coefficient))
                terms.append((exponent + j, -j, -coefficient))
                terms.append((exponent + j, 0, coefficient))
                ell += 1
            n += 1
        j += 1
    return JacobiSeries.from_terms(terms, order)


def pwz_coefficient(j: int, order: Rational) -> QSeries:
    """(-1)^j q^(j(j+1)/2) sum_{n>=0} i^n q^(n(j+1/2)) / (1 + i q^(j+1/2+n))."""
    order = Fraction(order)
    lead = Fraction(j * (j + 1), 2)
    total = QSeries.zero(order)
    n = 0
    while lead + n * (j + Fraction(1, 2)) < order:
        exponent = lead + n * (j + Fraction(1, 2))
        term = QSeries.from_terms({exponent: Cyc8.zeta8(2 * n)}, order)
        total = total + term.div_binomial(-I, j + Fraction(1, 2) + n)
        n += 1
    return total.scale(-1 if j % 2 else 1)


def pwz_findings(
    order: Rational, window: tuple[int, int] = DEFAULT_PWZ_WINDOW, coefficients: Sequence[int] = (1, 2, 3)
) -> list[Finding]:
    order = Fraction(order)
    left = pstar_series(order)
    findings = [mismatch_finding("cleared identity", left.first_mismatch(pwz_double_sum(order), window))]
    for j in coefficients:
        findings.append(
            mismatch_finding(
                f"[zeta^{j}]", left.zeta_coefficient(j).first_mismatch(pwz_coefficient(j, order))
            )
        )
    return findings


def pwz_identity_check(
    order: Rational, window: tuple[int, int] = DEFAULT_PWZ_WINDOW, coefficients: Sequence[int] = (1, 2, 3)
) -> VerificationReport:
    findings = pwz_findings(order, window, coefficients)
    return VerificationReport.from_findings("thm-pwz", RunParams(order=int(order)), findings)


def F_cone_numeric(z1: Number, z2: Number, z3: Number, tau: Number, ctx: MPContext) -> Number:
    return cone_sum_numeric(F_SPEC, (z1, z2, z3), tau, ctx)


def G_cone_numeric(z1: Number, z2: Number, z3: Number, tau: Number, ctx: MPContext) -> Number:
    return cone_sum_numeric(G_SPEC, (z1, z2, z3), tau, ctx)


def _theta_quotient(z2: Number, z3: Number, tau: Number, ctx: MPContext) -> Number:
    """eta^3 theta(z2 + z3) / (theta(z2) theta(z3))."""
    return (
        eta_numeric(tau, ctx) ** 3
        * theta_numeric(z2 + z3, tau, ctx)
        / (theta_numeric(z2, tau, ctx) * theta_numeric(z3, tau, ctx))
    )


def F_mu_numeric(z1: Number, z2: Number, z3: Number, tau: Number, ctx: MPContext) -> Number:
    """i theta(z1) mu(z1, z2) mu(z1, z3) - eta^3 theta(z2+z3)/(theta(z2) theta(z3)) mu(z1, z2+z3)."""
    theta = theta_numeric(z1, tau, ctx)
    product = ctx.j * theta * mu_numeric(z1, z2, tau, ctx) * mu_numeric(z1, z3, tau, ctx)
    return product - _theta_quotient(z2, z3, tau, ctx) * mu_numeric(z1, z2 + z3, tau, ctx)


def F_mu_jet(
    z1: Number, z2: Number, z3: Number, tau: Number, ctx: MPContext, order: int = 2, nodes: int = 64
) -> Jet:
    """Jet in z1, through the removable singularities at lattice points."""
    return contour_jet(
        lambda z: F_mu_numeric(z, z2, z3, tau, ctx), z1, contour_radius(tau.imag), ctx, order, nodes
    )


def Rstar_at_zero(z2: Number, z3: Number, tau: Number, ctx: MPContext) -> Number:
    """R*(0, z2, z3)
    = i/2 eta^3 (R(z2)/theta(z3) + R(z3)/theta(z2) - theta(z2+z3) R(z2+z3)/(theta(z2) theta(z3)))."""
    eta_cubed = eta_numeric(tau, ctx) ** 3
    theta2, theta3 = theta_numeric(z2, tau, ctx), theta_numeric(z3, tau, ctx)
    bracket = (
        R_numeric(z2, tau, ctx) / theta3
        + R_numeric(z3, tau, ctx) / theta2
        - theta_numeric(z2 + z3, tau, ctx) * R_numeric(z2 + z3, tau, ctx) / (theta2 * theta3)
    )
    return ctx.j / 2 * eta_cubed * bracket


def Rstar_numeric(z1: Number, z2: Number, z3: Number, tau: Number, ctx: MPContext) -> Number:
    if not z1:
        return Rstar_at_zero(z2, z3, tau, ctx)
    theta = theta_numeric(z1, tau, ctx)
    r2, r3 = R_numeric(z1 - z2, tau, ctx), R_numeric(z1 - z3, tau, ctx)
    half = ctx.mpf(1) / 2
    return (
        -half * theta * mu_numeric(z1, z2, tau, ctx) * r3
        - half * theta * r2 * mu_numeric(z1, z3, tau, ctx)
        - ctx.j / 4 * theta * r2 * r3
        - ctx.j * half * _theta_quotient(z2, z3, tau, ctx) * R_numeric(z1 - z2 - z3, tau, ctx)
    )


def Rstar_jet(
    z1: Number, z2: Number, z3: Number, tau: Number, ctx: MPContext, order: int = 2, nodes: int = 64
) -> Jet:
    """Wirtinger jet of R* in z1; theta*mu factors by contour, R factors termwise."""
    half = ctx.mpf(1) / 2
    r2, r3 = R_jet(z1 - z2, tau, ctx, order), R_jet(z1 - z3, tau, ctx, order)
    theta_mu2 = theta_mu_jet(z1, z2, tau, ctx, order, nodes)
    theta_mu3 = theta_mu_jet(z1, z3, tau, ctx, order, nodes)
    theta = theta_jet(z1, tau, ctx, order)
    tail = R_jet(z1 - z2 - z3, tau, ctx, order) * (-ctx.j * half * _theta_quotient(z2, z3, tau, ctx))
    return theta_mu2 * r3 * (-half) + r2 * theta_mu3 * (-half) + theta * r2 * r3 * (-ctx.j / 4) + tail


def Rstar_zero_limit_residual(z2: Number, z3: Number, tau: Number, ctx: MPContext, nodes: int = 64) -> Number:
    """The generic four-term R* at z1 -> 0 against the closed form at 0."""
    limit = Rstar_jet(ctx.mpc(0), z2, z3, tau, ctx, 0, nodes).value
    return relative_residual(limit, Rstar_at_zero(z2, z3, tau, ctx), ctx)


def Rstar_shift_residual(z2: Number, z3: Number, tau: Number, ctx: MPContext, nodes: int = 64) -> Number:
    """R*(tau, z2, z3) = -q^(1/2) zeta2^-1 zeta3^-1 R*(0, z2, z3) + i q^(3/8) zeta2^(-1/2) zeta3^(-1/2) eta^3
    (zeta3^(-1/2)/theta(z3) + zeta2^(-1/2)/theta(z2) - theta(z2+z3)/(theta(z2) theta(z3)))."""
    left = Rstar_jet(ctx.mpc(tau), z2, z3, tau, ctx, 0, nodes).value
    theta2, theta3 = theta_numeric(z2, tau, ctx), theta_numeric(z3, tau, ctx)
    bracket = (
        ctx.expjpi(-z3) / theta3
        + ctx.expjpi(-z2) / theta2
        - theta_numeric(z2 + z3, tau, ctx) / (theta2 * theta3)
    )
    right = -ctx.expjpi(tau - 2 * z2 - 2 * z3) * Rstar_at_zero(z2, z3, tau, ctx)
    right += ctx.j * ctx.expjpi(3 * tau / 4 - z2 - z3) * eta_numeric(tau, ctx) ** 3 * bracket
    return relative_residual(left, right, ctx)


def Fhat_jet(
    z1: Number, z2: Number, z3: Number, tau: Number, ctx: MPContext, order: int = 2, nodes: int = 64
) -> Jet:
    return F_mu_jet(z1, z2, z3, tau, ctx, order, nodes) + Rstar_jet(z1, z2, z3, tau, ctx, order, nodes)


def Fhat_numeric(z1: Number, z2: Number, z3: Number, tau: Number, ctx: MPContext) -> Number:
    """i theta(z1) mu^(z1, z2) mu^(z1, z3) - eta^3 theta(z2+z3)/(theta(z2) theta(z3)) mu^(z1, z2+z3)."""
    try:
        theta = theta_numeric(z1, tau, ctx)
        product = ctx.j * theta * mu_hat_numeric(z1, z2, tau, ctx) * mu_hat_numeric(z1, z3, tau, ctx)
        return product - _theta_quotient(z2, z3, tau, ctx) * mu_hat_numeric(z1, z2 + z3, tau, ctx)
    except PoleProximity:
        logger.debug("Fhat at z1=%s through its removable singularity", z1)
        return Fhat_jet(z1, z2, z3, tau, ctx, order=0).value


def Fhat_elliptic_residual(
    z: tuple[Number, Number, Number], shifts: tuple[int, int, int, int, int, int], tau: Number, ctx: MPContext
) -> Number:
    """Fhat(z_k + n_k tau + m_k) = (-1)^(sum n_k + m_k) zeta1^(n1-n2-n3) zeta2^(n2-n1) zeta3^(n3-n1)
    q^(n1^2/2 + n2^2/2 + n3^2/2 - n1 n2 - n1 n3) Fhat(z)."""
    z1, z2, z3 = z
    n1, m1, n2, m2, n3, m3 = shifts
    left = Fhat_numeric(z1 + n1 * tau + m1, z2 + n2 * tau + m2, z3 + n3 * tau + m3, tau, ctx)
    sign = -1 if (n1 + m1 + n2 + m2 + n3 + m3) % 2 else 1
    phase = 2 * ((n1 - n2 - n3) * z1 + (n2 - n1) * z2 + (n3 - n1) * z3)
    phase += (n1 * n1 + n2 * n2 + n3 * n3 - 2 * n1 * n2 - 2 * n1 * n3) * tau
    right = sign * ctx.expjpi(phase) * Fhat_numeric(z1, z2, z3, tau, ctx)
    return relative_residual(left, right, ctx)


def Fhat_transform_residual(
    element: GroupElement, z: tuple[Number, Number, Number], tau: Number, ctx: MPContext
) -> Number:
    """Fhat(z/(c tau + d); M tau) = psi^-3 (c tau + d)^(3/2)
    e^(pi i c (-z1^2 - z2^2 - z3^2 + 2 z1 z2 + 2 z1 z3)/(c tau + d)) Fhat(z; tau)."""
    z1, z2, z3 = z
    factor = element.automorphy(tau)
    left = Fhat_numeric(z1 / factor, z2 / factor, z3 / factor, element.act(tau), ctx)
    quadratic = -z1 * z1 - z2 * z2 - z3 * z3 + 2 * z1 * z2 + 2 * z1 * z3
    right = (
        (psi_multiplier(element) ** -3).value(ctx)
        * automorphy_factor(element, tau, Fraction(3, 2), ctx)
        * ctx.expjpi(element.c * quadratic / factor)
        * Fhat_numeric(z1, z2, z3, tau, ctx)
    )
    return relative_residual(left, right, ctx)


def _quarter_point(tau: Number, ctx: MPContext) -> Number:
    """tau/2 + 1/4."""
    return tau / 2 + ctx.mpf(1) / 4


def _shifted_pairs(tau: Number, ctx: MPContext) -> Iterator[tuple[int, Number, Number]]:
    base = _quarter_point(tau, ctx)
    half = ctx.mpf(1) / 2
    for alpha in (0, 1):
        for beta in (0, 1):
            yield alpha + beta, base + alpha * half, base + beta * half


def _i_power(ctx: MPContext, exponent: int) -> Number:
    return ctx.expjpi(ctx.mpf(exponent) / 2)


def Hhat_numeric(z: Number, tau: Number, ctx: MPContext) -> Number:
    """Hhat(z) = q^(-1/4) zeta sum_{alpha, beta} i^(-alpha-beta) Fhat(z, a + alpha/2, a + beta/2),
    a = tau/2 + 1/4."""
    total = ctx.fsum(
        _i_power(ctx, -power) * Fhat_numeric(z, w2, w3, tau, ctx)
        for power, w2, w3 in _shifted_pairs(tau, ctx)
    )
    return ctx.expjpi(2 * z - tau / 2) * total


def Hhat_jet(z: Number, tau: Number, ctx: MPContext, order: int = 1, nodes: int = 64) -> Jet:
    total = Jet([0] * (order + 1))
    for power, w2, w3 in _shifted_pairs(tau, ctx):
        total = total + Fhat_jet(z, w2, w3, tau, ctx, order, nodes) * _i_power(ctx, -power)
    return Jet.exponential(ctx.expjpi(2 * z - tau / 2), 2 * ctx.pi * ctx.j, order) * total


def _hhat_lattice_jets(tau: Number, ctx: MPContext, nodes: int) -> tuple[Jet, Jet]:
    return Hhat_jet(ctx.mpc(0), tau, ctx, 1, nodes), Hhat_jet(ctx.mpc(tau), tau, ctx, 1, nodes)


def Hhat1_numeric(tau: Number, ctx: MPContext, nodes: int = 64) -> Number:
    """-(Hhat(0) + q^(-1/2) Hhat(tau))/2, identically zero."""
    at_zero, at_tau = _hhat_lattice_jets(tau, ctx, nodes)
    return -(at_zero.value + ctx.expjpi(-tau) * at_tau.value) / 2


def Hhat2_numeric(tau: Number, ctx: MPContext, nodes: int = 64) -> Number:
    """[d/dzeta Hhat]_(zeta=1) - [d/dzeta q^(-1/2) zeta^-1 Hhat(z + tau)]_(zeta=1)."""
    at_zero, at_tau = _hhat_lattice_jets(tau, ctx, nodes)
    two_pi_i = 2 * ctx.pi * ctx.j
    first = at_zero.derivative(1) / two_pi_i
    second = ctx.expjpi(-tau) / two_pi_i * (-two_pi_i * at_tau.value + at_tau.derivative(1))
    return first - second


def Hhat_shift_residual(z: Number, tau: Number, ctx: MPContext) -> Number:
    """Hhat(z + tau) = q^(1/4) zeta^2 sum_{alpha, beta} i^(alpha+beta) Fhat(z, tau/2+1/4+alpha/2, ...)."""
    left = Hhat_numeric(z + tau, tau, ctx)
    total = ctx.fsum(
        _i_power(ctx, power) * Fhat_numeric(z, w2, w3, tau, ctx) for power, w2, w3 in _shifted_pairs(tau, ctx)
    )
    return relative_residual(left, ctx.expjpi(tau / 2 + 4 * z) * total, ctx)


def Hhat_transform_residual(element: GroupElement, z: Number, tau: Number, ctx: MPContext) -> Number:
    """Hhat(z/(c tau + d); M tau)
    = hhat_multiplier(M) (c tau + d)^(3/2) e^(-pi i c z^2/(c tau + d)) Hhat(z)."""
    factor = element.automorphy(tau)
    left = Hhat_numeric(z / factor, element.act(tau), ctx)
    right = (
        hhat_multiplier(element).value(ctx)
        * automorphy_factor(element, tau, Fraction(3, 2), ctx)
        * ctx.expjpi(-element.c * z * z / factor)
        * Hhat_numeric(z, tau, ctx)
    )
    return relative_residual(left, right, ctx)


@dataclass(frozen=True)
class PhatContext:
    """Evaluation data for the z-derivatives of Fcal at 0."""

    tau: UHPoint
    precision: int
    nodes: int = 64
    radius: Optional[float] = None

    def __post_init__(self) -> None:
        limit = 0.5 * min(1.0, float(self.tau.v))
        if self.radius is not None and not 0 < self.radius < limit:
            raise DomainViolation(f"contour radius must lie in (0, {limit:.3g}), got {self.radius}")
        if self.nodes < 8:
            raise DomainViolation(f"a contour needs at least 8 nodes, got {self.nodes}")

    def context(self) -> MPContext:
        return make_context(self.precision)


def Fcal_numeric(z: Number, tau: Number, ctx: MPContext) -> Number:
    """Fcal(z) = q^(-1/8) zeta^(1/2) theta(z) mu^(z, tau/2 + 1/4)."""
    a = _quarter_point(tau, ctx)
    try:
        inner = mu_numeric(z, a, tau, ctx) + ctx.j / 2 * R_numeric(z - a, tau, ctx)
        return ctx.expjpi(z - tau / 4) * theta_numeric(z, tau, ctx) * inner
    except PoleProximity:
        return Fcal_jet(z, tau, ctx, order=0).value


def Fcal_jet(
    z: Number, tau: Number, ctx: MPContext, order: int = 2, nodes: int = 64, radius: Optional[float] = None
) -> Jet:
    a = _quarter_point(tau, ctx)
    if radius is None:
        holomorphic = theta_mu_jet(z, a, tau, ctx, order, nodes)
    else:
        holomorphic = contour_jet(
            lambda w: theta_numeric(w, tau, ctx) * mu_numeric(w, a, tau, ctx), z, radius, ctx, order, nodes
        )
    inner = holomorphic + theta_jet(z, tau, ctx, order) * R_jet(z - a, tau, ctx, order) * (ctx.j / 2)
    return Jet.exponential(ctx.expjpi(z - tau / 4), ctx.pi * ctx.j, order) * inner


def Fcal_derivs(context: PhatContext) -> tuple[Number, Number]:
    """(Fcal'(0), Fcal''(0))."""
    ctx = context.context()
    jet = Fcal_jet(ctx.mpc(0), context.tau.to_complex(ctx), ctx, 2, context.nodes, context.radius)
    return jet.derivative(1), jet.derivative(2)


def Fcal_zero_closed(tau: Number, ctx: MPContext) -> Number:
    """Fcal(0) = -i eta^3 q^(-1/8) / theta(tau/2 + 1/4)."""
    theta = theta_numeric(_quarter_point(tau, ctx), tau, ctx)
    return -ctx.j * eta_numeric(tau, ctx) ** 3 * ctx.expjpi(-tau / 4) / theta


def phat_from_derivs(first: Number, second: Number, tau: Number, ctx: MPContext) -> Number:
    """i Fcal'(0)^2/(4 pi^2 eta^6) + e^(-pi i/4) eta(4 tau) Fcal''(0)/(4 pi^2 eta^3 eta(2 tau)^2)."""
    eta = eta_numeric(tau, ctx)
    scale = 4 * ctx.pi**2
    holomorphic_factor = ctx.expjpi(-ctx.mpf(1) / 4) * eta_numeric(4 * tau, ctx)
    return ctx.j * first**2 / (scale * eta**6) + holomorphic_factor * second / (
        scale * eta**3 * eta_numeric(2 * tau, ctx) ** 2
    )


def phat_omega_numeric(tau: Number, ctx: MPContext, nodes: int = 64) -> Number:
    jet = Fcal_jet(ctx.mpc(0), tau, ctx, 2, nodes)
    return phat_from_derivs(jet.derivative(1), jet.derivative(2), tau, ctx)


def _eta_conj(scale: int, tau: Number, ctx: MPContext) -> Number:
    """eta(-scale * conj(tau))."""
    return eta_numeric(-scale * ctx.conj(tau), ctx)


def _f4_quotient(tau: Number, ctx: MPContext) -> Number:
    return _eta_conj(2, tau, ctx) ** 5 / (_eta_conj(1, tau, ctx) ** 2 * _eta_conj(4, tau, ctx) ** 2)


def f_family_numeric(k: int, tau: Number, ctx: MPContext, nodes: int = 64) -> Number:
    v = tau.imag
    if k == 1:
        return v ** (ctx.mpf(3) / 2) * _eta_conj(4, tau, ctx) ** 3
    if k == 2:
        return Fcal_jet(ctx.mpc(0), tau, ctx, 1, nodes).derivative(1) / eta_numeric(tau, ctx) ** 3
    if k == 3:
        return eta_numeric(4 * tau, ctx) / eta_numeric(2 * tau, ctx) ** 2
    if k == 4:
        return ctx.sqrt(v) * _f4_quotient(tau, ctx)
    raise DomainViolation(f"f_{k} is not defined, expected k in 1..4")


def g4_numeric(tau: Number, ctx: MPContext) -> Number:
    """v^(1/2) eta(-2 conj tau)^2 / eta(-4 conj tau)."""
    return ctx.sqrt(tau.imag) * _eta_conj(2, tau, ctx) ** 2 / _eta_conj(4, tau, ctx)


def lowering_closed(tau: Number, ctx: MPContext, nodes: int = 64, printed: bool = False) -> Number:
    """(e^(3 pi i/4) sqrt 2/pi) f1 f2 - (1/(2 sqrt 2 pi)) f3 g4.

    printed=True swaps g4 for e^(pi i/4) f4.
    """
    root = ctx.sqrt(2)
    first = ctx.expjpi(ctx.mpf(3) / 4) * root / ctx.pi * f_family_numeric(1, tau, ctx) * f_family_numeric(
        2, tau, ctx, nodes
    )
    f3 = f_family_numeric(3, tau, ctx)
    if printed:
        second = ctx.expjpi(ctx.mpf(1) / 4) * f3 * f_family_numeric(4, tau, ctx)
    else:
        second = f3 * g4_numeric(tau, ctx)
    return first - second / (2 * root * ctx.pi)


def dtaubar_fcal1_closed(tau: Number, ctx: MPContext) -> Number:
    """pi e^(3 pi i/4) sqrt 2 v^(-1/2) eta^3 eta(-4 conj tau)^3."""
    return (
        ctx.pi
        * ctx.expjpi(ctx.mpf(3) / 4)
        * ctx.sqrt(2 / tau.imag)
        * eta_numeric(tau, ctx) ** 3
        * _eta_conj(4, tau, ctx) ** 3
    )


def dtaubar_fcal2_closed(tau: Number, ctx: MPContext, printed: bool = False) -> Number:
    """(pi e^(-pi i/4) eta^3/(sqrt 2 v^(3/2))) eta(-2 conj tau)^2/eta(-4 conj tau); with printed=True the
    eta(-2 conj tau)^5/(eta(-conj tau)^2 eta(-4 conj tau)^2) variant."""
    prefactor = ctx.pi * ctx.expjpi(-ctx.mpf(1) / 4) * eta_numeric(tau, ctx) ** 3
    prefactor /= ctx.sqrt(2) * tau.imag ** (ctx.mpf(3) / 2)
    if printed:
        return prefactor * _f4_quotient(tau, ctx)
    return prefactor * _eta_conj(2, tau, ctx) ** 2 / _eta_conj(4, tau, ctx)


def dtaubar_fcal_series(tau: Number, ctx: MPContext) -> tuple[Number, Number]:
    """d/d(tau bar) of Fcal'(0) and Fcal''(0) from the R-derivative sums at -tau/2 - 1/4."""
    a, b = Fraction(-1, 2), Fraction(-1, 4)
    value = dtaubar_R_numeric(a, b, tau, ctx)
    slope = dz_dtaubar_R_numeric(a, b, tau, ctx)
    prefactor = -ctx.pi * ctx.j * eta_numeric(tau, ctx) ** 3 * ctx.expjpi(-tau / 4)
    return prefactor * value, 2 * prefactor * (slope + ctx.pi * ctx.j * value)


def phat_lowering_closed(tau: Number, ctx: MPContext, nodes: int = 64) -> Number:
    """-2 i v^2 d/d(tau bar) Phat from the closed forms of the derivatives of Fcal'(0) and Fcal''(0)."""
    first = Fcal_jet(ctx.mpc(0), tau, ctx, 1, nodes).derivative(1)
    eta = eta_numeric(tau, ctx)
    scale = 4 * ctx.pi**2
    derivative = 2 * ctx.j * first * dtaubar_fcal1_closed(tau, ctx) / (scale * eta**6)
    derivative += (
        ctx.expjpi(-ctx.mpf(1) / 4)
        * eta_numeric(4 * tau, ctx)
        * dtaubar_fcal2_closed(tau, ctx)
        / (scale * eta**3 * eta_numeric(2 * tau, ctx) ** 2)
    )
    return -2 * ctx.j * tau.imag**2 * derivative


def holomorphic_correction(tau: Number, ctx: MPContext) -> Number:
    """phi(v) f3(tau) with phi(v) = 1/(pi sqrt(2v))."""
    return f_family_numeric(3, tau, ctx) / (ctx.pi * ctx.sqrt(2 * tau.imag))


def holomorphic_part_numeric(series: QSeries, tau: Number, ctx: MPContext) -> Number:
    """Pbar_omega(q) + 1/4 - eta(4 tau)/(2 eta(2 tau)^2), the q-series summed from its truncation."""
    return series.evaluate(tau, ctx) + ctx.mpf(1) / 4 - f_family_numeric(3, tau, ctx) / 2

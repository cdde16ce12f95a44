"""Registered identities: each one names a check, its default parameters and its tolerance."""
import logging
import random
from dataclasses import dataclass
from fnmatch import fnmatchcase
from fractions import Fraction
from typing import Callable, Final, Iterator, Optional

from mpmath.ctx_mp import MPContext

from .appell import (
    R_holo_split,
    R_law_residuals,
    R_numeric,
    R_torsion_numeric,
    dtaubar_R_numeric,
    mu_elliptic_residuals,
    mu_hat_elliptic_residual,
    mu_hat_numeric,
    mu_hat_transform_residual,
    mu_torsion_numeric,
    mu_torsion_series,
    theta_law_residuals,
)
from .classical import (
    EtaQuotient,
    TorsionPoint,
    eta_numeric,
    finite_jtp_finding,
    heine_finding,
    heine_parameters,
    theta_numeric,
    theta_series_at_torsion,
    theta_shift_factor,
    theta_transform_check,
)
from .combinatorics import Family, Side, census_series, genfun, overpartition_series, overpartitions
from .exactalg import ONE, Cyc8, JacobiSeries, Monomial, QSeries
from .exceptions import UnknownIdentity
from .indefinite import (
    F_cone_numeric,
    F_mu_jet,
    F_mu_numeric,
    Fcal_jet,
    Fcal_zero_closed,
    Fhat_elliptic_residual,
    Fhat_numeric,
    Fhat_transform_residual,
    Hhat1_numeric,
    Hhat2_numeric,
    Hhat_shift_residual,
    Hhat_transform_residual,
    Rstar_numeric,
    Rstar_shift_residual,
    Rstar_zero_limit_residual,
    dtaubar_fcal1_closed,
    dtaubar_fcal2_closed,
    dtaubar_fcal_series,
    f_family_numeric,
    family_series,
    holomorphic_correction,
    holomorphic_part_numeric,
    lowering_closed,
    pbar_omega_series,
    phat_lowering_closed,
    phat_omega_numeric,
    pwz_findings,
)
from .models import EXACT_TOLERANCE, Finding, RunParams, mismatch_finding
from .modular import (
    GroupClass,
    GroupElement,
    automorphy_factor,
    chi_multiplier,
    group_membership,
    in_gamma0_4,
    laplacian_fd,
    lowering_fd,
    phat_multiplier,
    psi_multiplier,
    random_gamma_elements,
    random_sl2z_elements,
    weight_transform_residual,
    xi_fd,
)
from .numeric import Number, UHPoint, dtaubar_fd, make_context, relative_residual, with_guard_bits

logger = logging.getLogger(__name__)

SEED: Final[int] = 20240917
HHAT_TAU_POINTS: Final[tuple[str, ...]] = (
    "0.17,1.05",
    "0.11,0.93",
    "-0.23,1.07",
    "0.31,1.49",
    "-0.41,1.13",
)
GAMMA_MATRICES: Final[tuple[str, ...]] = ("7,5,4,3", "1,0,8,1", "5,-2,8,-3")
S_AND_T: Final[tuple[str, ...]] = ("0,-1,1,0", "1,1,0,1")


@dataclass(frozen=True)
class CheckContext:
    """Resolved parameters handed to a check."""

    params: RunParams
    tolerance: float
    guard_bits: int = 64
    nodes: int = 64
    cap: int = 50
    fd_step: float = 1e-4
    fd_step_laplacian: float = 1e-3

    @property
    def order(self) -> int:
        return self.params.order

    def context(self) -> MPContext:
        return make_context(self.params.precision)

    def guarded(self) -> MPContext:
        return with_guard_bits(self.context(), self.guard_bits)

    def taus(self, ctx: MPContext) -> list[Number]:
        return [UHPoint.parse(text).to_complex(ctx) for text in self.params.tau_points]

    @property
    def elements(self) -> list[GroupElement]:
        return [GroupElement.parse(text) for text in self.params.matrices]

    def precision_tolerance(self, slack_bits: int) -> float:
        """2^(slack_bits - P)."""
        return 2.0 ** (slack_bits - self.params.precision)

    def finding(self, label: str, residual: Number, tolerance: Optional[float] = None) -> Finding:
        return Finding(
            label=label,
            residual=float(residual),
            tolerance=self.tolerance if tolerance is None else tolerance,
        )

    def advisory(self, label: str, residual: Number) -> Finding:
        return Finding(label=label, residual=float(residual), tolerance=self.tolerance, advisory=True)


Check = Callable[[CheckContext], list[Finding]]


@dataclass(frozen=True)
class Identity:
    id: str
    summary: str
    check: Check
    tolerance: float = EXACT_TOLERANCE
    order: Optional[int] = None
    precision: Optional[int] = None
    tau_points: tuple[str, ...] = ()
    matrices: tuple[str, ...] = ()
    numeric: bool = False
    slow: bool = False


REGISTRY: dict[str, Identity] = {}


def identity(identity_id: str, summary: str, **defaults) -> Callable[[Check], Check]:
    def decorator(check: Check) -> Check:
        REGISTRY[identity_id] = Identity(identity_id, summary, check, **defaults)
        return check

    return decorator


def get_identity(identity_id: str) -> Identity:
    try:
        return REGISTRY[identity_id]
    except KeyError:
        raise UnknownIdentity(f"no identity registered as {identity_id!r}") from None


def identities(pattern: Optional[str] = None) -> list[Identity]:
    """Registered identities in registry order, filtered by a glob pattern."""
    return [item for key, item in REGISTRY.items() if pattern is None or fnmatchcase(key, pattern)]


def _dict_findings(
    context: CheckContext, prefix: str, residuals: dict[str, Number], tolerance: Optional[float] = None
) -> Iterator[Finding]:
    for label, residual in residuals.items():
        yield context.finding(f"{prefix} {label}", residual, tolerance)


def _generic_points(
    rng: random.Random, ctx: MPContext, tau: Number, count: int, spread: float = 0.6
) -> list[Number]:
    """count points x + beta*tau with |x| < 0.45 and |beta| < spread."""
    return [
        ctx.mpf(rng.uniform(-0.45, 0.45)) + ctx.mpf(rng.uniform(-spread, spread)) * tau for _ in range(count)
    ]


def _label(ctx: MPContext, value: Number) -> str:
    return ctx.nstr(value, 5)


def _series_match(label: str, left: QSeries, right: QSeries) -> Finding:
    return mismatch_finding(label, left.first_mismatch(right))


def _appell_match(family: Family, order: int) -> list[Finding]:
    definition = genfun(family, order)
    appell = family_series(family, order, Side.APPELL)
    return [_series_match(f"{family.value} to O(q^{order})", definition, appell)]


@identity("spt-andrews", "spt(q) as the divisor sum plus the Lerch-type sum", order=40)
def _spt_andrews(context: CheckContext) -> list[Finding]:
    return _appell_match(Family.SPT, context.order)


@identity("spt-omega", "spt_omega(q) against its Lerch-type representation", order=40)
def _spt_omega(context: CheckContext) -> list[Finding]:
    return _appell_match(Family.SPT_OMEGA, context.order)


@identity("sptbar-omega", "sptbar_omega(q) against its Lerch-type representation", order=40)
def _sptbar_omega(context: CheckContext) -> list[Finding]:
    return _appell_match(Family.SPTBAR_OMEGA, context.order)


@identity("sptG2-equiv", "spt_G2(q) equals sptbar_omega(q) termwise", order=40)
def _spt_g2(context: CheckContext) -> list[Finding]:
    order = context.order
    g2, sptbar = genfun(Family.SPT_G2, order), genfun(Family.SPTBAR_OMEGA, order)
    return [_series_match("spt_G2 - sptbar_omega", g2, sptbar)]


@identity("pomega-qomega", "p_omega(q) = q omega(q)", order=40)
def _pomega(context: CheckContext) -> list[Finding]:
    return _appell_match(Family.P_OMEGA, context.order)


@identity("thm-pwz", "cleared two-variable generating function against its double sum", order=25)
def _thm_pwz(context: CheckContext) -> list[Finding]:
    return pwz_findings(context.order)


@identity("cor-pwrep", "pbar_omega(q) through the indefinite triple sum", order=60)
def _cor_pwrep(context: CheckContext) -> list[Finding]:
    order = context.order
    definition = pbar_omega_series(order, "definition")
    n = max(0, min(25, order - 1, context.cap))
    oracle = census_series(Family.PBAR_OMEGA, n, context.cap)
    return [
        _series_match("triple sum", definition, pbar_omega_series(order, "triple_sum")),
        _series_match(f"enumeration n <= {n}", definition.truncate(n + 1), oracle),
    ]


_BRZ_POINTS: Final = (
    ((0.13, 0.21), (0.37, 0.29), (-0.19, 0.17)),
    ((-0.27, -0.35), (0.11, 0.43), (0.23, -0.12)),
    ((0.31, 0.52), (-0.08, -0.31), (0.29, 0.38)),
    ((0.05, -0.14), (0.41, 0.06), (-0.33, -0.41)),
    ((-0.39, 0.33), (-0.21, 0.24), (0.17, 0.55)),
)


def _lattice_point(ctx: MPContext, tau: Number, x: float, beta: float) -> Number:
    return ctx.mpf(x) + ctx.mpf(beta) * tau


@identity(
    "brz-F",
    "cone sum F against its Appell-function representation",
    tolerance=1e-20,
    tau_points=("0.17,1.05",),
    numeric=True,
)
def _brz_f(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    findings = []
    for tau in context.taus(ctx):
        for index, point in enumerate(_BRZ_POINTS, start=1):
            z1, z2, z3 = (_lattice_point(ctx, tau, x, beta) for x, beta in point)
            cone = F_cone_numeric(z1, z2, z3, tau, ctx)
            appell = F_mu_numeric(z1, z2, z3, tau, ctx)
            findings.append(context.finding(f"point {index}", relative_residual(cone, appell, ctx)))
        z2, z3 = (_lattice_point(ctx, tau, x, beta) for x, beta in _BRZ_POINTS[0][1:])
        limit = F_mu_jet(ctx.mpc(0), z2, z3, tau, ctx, 0, context.nodes).value
        near = F_mu_numeric(ctx.mpc(1e-10, 5e-11), z2, z3, tau, ctx)
        findings.append(context.finding("removable at z1=0", relative_residual(near, limit, ctx), 1e-6))
    return findings


@identity(
    "hhat1-zero",
    "Hhat_1 vanishes identically",
    tolerance=1e-20,
    tau_points=HHAT_TAU_POINTS,
    numeric=True,
)
def _hhat1_zero(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    return [
        context.finding(f"|Hhat_1| at tau={_label(ctx, tau)}", abs(Hhat1_numeric(tau, ctx, context.nodes)))
        for tau in context.taus(ctx)
    ]


@identity(
    "hhat2-phat",
    "Hhat_2 = -4 i eta^3 Phat_omega",
    tolerance=1e-20,
    tau_points=HHAT_TAU_POINTS[:3],
    numeric=True,
)
def _hhat2_phat(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    findings = []
    for tau in context.taus(ctx):
        phat = phat_omega_numeric(tau, ctx, context.nodes)
        expected = -4 * ctx.j * eta_numeric(tau, ctx) ** 3 * phat
        residual = relative_residual(Hhat2_numeric(tau, ctx, context.nodes), expected, ctx)
        findings.append(context.finding(f"tau={_label(ctx, tau)}", residual))
    return findings


@identity(
    "phat-weight1",
    "Phat_omega transforms with weight 1 and multiplier e^(pi i c/8) on Gamma",
    tolerance=1e-15,
    matrices=GAMMA_MATRICES,
    numeric=True,
    slow=True,
)
def _phat_weight1(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    nodes = context.nodes
    findings = []
    for element in context.elements:
        for tau in context.taus(ctx):
            residual = weight_transform_residual(
                lambda point, work: phat_omega_numeric(point, work, nodes),
                1,
                phat_multiplier,
                element,
                tau,
                ctx,
                context.guard_bits,
            )
            findings.append(context.finding(f"M={element} tau={_label(ctx, tau)}", residual))
    return findings


@identity(
    "phat-holpart",
    "Phat_omega minus its holomorphic part decays exponentially once phi(v) f3 is removed",
    tolerance=1e-8,
    order=120,
    tau_points=("0.3,3", "0.3,4"),
    numeric=True,
)
def _phat_holpart(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    series = pbar_omega_series(context.order, "definition")
    remainders = []
    for tau in context.taus(ctx):
        phat = phat_omega_numeric(tau, ctx, context.nodes)
        holomorphic = holomorphic_part_numeric(series, tau, ctx)
        remainder = abs(phat - holomorphic - holomorphic_correction(tau, ctx))
        logger.debug("non-holomorphic remainder at v=%s: %s", _label(ctx, tau.imag), _label(ctx, remainder))
        remainders.append((_label(ctx, tau.imag), remainder))
    findings = [context.finding(f"remainder at v={v}", value) for v, value in remainders[-1:]]
    findings.extend(
        context.finding(f"decay v={first} -> v={second}", later / earlier, 0.1)
        for (first, earlier), (second, later) in zip(remainders, remainders[1:])
    )
    return findings


@identity(
    "phat-lowering",
    "L(Phat_omega) = (e^(3 pi i/4) sqrt 2/pi) f1 f2 - f3 g4/(2 sqrt 2 pi)",
    tolerance=1e-6,
    numeric=True,
)
def _phat_lowering(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    nodes = context.nodes
    findings = []
    for tau in context.taus(ctx):
        label = _label(ctx, tau)
        lowered = lowering_fd(lambda point: phat_omega_numeric(point, ctx, nodes), tau, ctx, context.fd_step)
        closed = lowering_closed(tau, ctx, nodes)
        findings.append(
            context.finding(f"finite differences tau={label}", relative_residual(lowered.value, closed, ctx))
        )
        analytic = phat_lowering_closed(tau, ctx, nodes)
        findings.append(
            context.finding(
                f"closed derivatives tau={label}", relative_residual(analytic, closed, ctx), 1e-20
            )
        )
        printed = lowering_closed(tau, ctx, nodes, printed=True)
        findings.append(
            context.advisory(f"printed f4 form tau={label}", relative_residual(lowered.value, printed, ctx))
        )
    return findings


def _fcal_derivative(k: int, nodes: int, ctx: MPContext) -> Callable[[Number], Number]:
    return lambda tau: Fcal_jet(ctx.mpc(0), tau, ctx, k, nodes).derivative(k)


@identity(
    "f2-shadow",
    "xi_(1/2) f2 = 2 sqrt 2 e^(-pi i/4) pi eta(4 tau)^3 and the tau-bar derivative of Fcal'(0)",
    tolerance=1e-6,
    numeric=True,
)
def _f2_shadow(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    nodes = context.nodes
    findings = []
    for tau in context.taus(ctx):
        label = _label(ctx, tau)
        shadow = xi_fd(
            lambda point: f_family_numeric(2, point, ctx, nodes), Fraction(1, 2), tau, ctx, context.fd_step
        )
        expected = 2 * ctx.sqrt(2) * ctx.expjpi(-ctx.mpf(1) / 4) * ctx.pi * eta_numeric(4 * tau, ctx) ** 3
        findings.append(context.finding(f"xi f2 tau={label}", relative_residual(shadow.value, expected, ctx)))
        derivative = dtaubar_fd(_fcal_derivative(1, nodes, ctx), tau, ctx, context.fd_step)
        closed = dtaubar_fcal1_closed(tau, ctx)
        residual = relative_residual(derivative.value, closed, ctx)
        findings.append(context.finding(f"Fcal'(0) derivative tau={label}", residual))
        series, _ = dtaubar_fcal_series(tau, ctx)
        residual = relative_residual(series, closed, ctx)
        findings.append(context.finding(f"Fcal'(0) derivative series tau={label}", residual, 1e-20))
    return findings


_TORSION_SAMPLES: Final = (
    TorsionPoint(Fraction(1, 2), Fraction(1, 4)),
    TorsionPoint(Fraction(1, 4), Fraction(1, 4)),
)


@identity(
    "theta-shifts",
    "theta elliptic shifts, parity, theta'(0) and the modular law",
    matrices=S_AND_T + GAMMA_MATRICES[:1],
    order=30,
    numeric=True,
)
def _theta_shifts(context: CheckContext) -> list[Finding]:
    work = context.guarded()
    tolerance = context.precision_tolerance(10)
    rng = random.Random(SEED)
    findings = []
    for tau in context.taus(work):
        for z in _generic_points(rng, work, tau, 2):
            label = f"z={_label(work, z)}"
            findings.extend(_dict_findings(context, label, theta_law_residuals(z, tau, work), tolerance))
            for element in context.elements:
                residual = theta_transform_check(element, z, tau, work)
                findings.append(context.finding(f"{label} M={element}", residual, tolerance))
    for point in _TORSION_SAMPLES:
        base = theta_series_at_torsion(point, context.order)
        for lam in (-1, 0, 1):
            for mu in (-1, 0, 1):
                factor = theta_shift_factor(point, lam, mu)
                shifted = theta_series_at_torsion(point.shift(lam, mu), context.order + factor.q_exp)
                expected = base.shift(factor.q_exp).scale(factor.coef)
                findings.append(_series_match(f"theta({point}) shifted by ({lam}, {mu})", shifted, expected))
    return findings


@identity(
    "mu-laws",
    "elliptic, symmetry and modular laws of mu, mu-hat and R",
    matrices=S_AND_T,
    numeric=True,
)
def _mu_laws(context: CheckContext) -> list[Finding]:
    work = context.guarded()
    tolerance = context.precision_tolerance(10)
    rng = random.Random(SEED + 1)
    taus = context.taus(work)
    findings = []
    for index in range(10):
        tau = taus[index % len(taus)]
        z1, z2 = _generic_points(rng, work, tau, 2)
        label = f"point {index + 1}"
        residuals = mu_elliptic_residuals(z1, z2, tau, work)
        findings.extend(_dict_findings(context, f"{label} mu", residuals, tolerance))
        findings.extend(_dict_findings(context, f"{label} R", R_law_residuals(z1, tau, work), tolerance))
        shifts = tuple(rng.randint(-1, 1) for _ in range(4))
        residual = mu_hat_elliptic_residual(z1, z2, shifts, tau, work)
        findings.append(context.finding(f"{label} mu-hat shift {shifts}", residual, tolerance))
        for element in context.elements:
            residual = mu_hat_transform_residual(element, z1, z2, tau, work)
            findings.append(context.finding(f"{label} mu-hat M={element}", residual, tolerance))
    return findings


@identity("finite-jtp", "finite Jacobi triple product for n <= 5", order=30)
def _finite_jtp(context: CheckContext) -> list[Finding]:
    return [finite_jtp_finding(n, context.order) for n in range(0, 6)]


@identity("heine", "Heine's transformation at the specializations behind the double sum", order=25)
def _heine(context: CheckContext) -> list[Finding]:
    return [heine_finding(*heine_parameters(j), context.order) for j in (0, 1, 2)]


@identity("pbar-census", "enumerated pbar_omega(n) and overpartition counts against the q-series", order=25)
def _pbar_census(context: CheckContext) -> list[Finding]:
    n = min(context.order, context.cap)
    enumerated = census_series(Family.PBAR_OMEGA, n, context.cap)
    findings = [_series_match(f"pbar_omega n <= {n}", enumerated, genfun(Family.PBAR_OMEGA, n + 1))]
    small = min(n, 15)
    counts = {k: sum(1 for _ in overpartitions(k)) for k in range(0, small + 1)}
    counted = QSeries.from_terms(counts, small + 1)
    findings.append(_series_match(f"overpartitions n <= {small}", counted, overpartition_series(small + 1)))
    return findings


@identity(
    "eta-multiplier",
    "eta(M tau) = psi(M) (c tau + d)^(1/2) eta(tau)",
    matrices=S_AND_T,
    numeric=True,
)
def _eta_multiplier(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    tolerance = context.precision_tolerance(8)
    elements = context.elements + list(random_sl2z_elements(random.Random(SEED + 2), 5))
    findings = []
    for element in elements:
        unity = (psi_multiplier(element) ** 24).turns == 0
        findings.append(context.finding(f"psi({element})^24 = 1", 0 if unity else 1, EXACT_TOLERANCE))
        for tau in context.taus(ctx):
            residual = weight_transform_residual(
                eta_numeric, Fraction(1, 2), psi_multiplier, element, tau, ctx, context.guard_bits
            )
            findings.append(context.finding(f"M={element} tau={_label(ctx, tau)}", residual, tolerance))
    return findings


@identity(
    "theta-torsion",
    "theta, R and mu at the torsion points tau + 1/2 and tau/2 + 1/4",
    order=30,
    tolerance=1e-20,
    tau_points=("0.13,1.1",),
    numeric=True,
)
def _theta_torsion(context: CheckContext) -> list[Finding]:
    order = context.order
    quarter, half = _TORSION_SAMPLES[0], TorsionPoint(1, Fraction(1, 2))
    quarter_quotient = EtaQuotient(((2, 2), (4, -1)), Monomial(Cyc8.zeta8(5), Fraction(-1, 8)))
    half_quotient = EtaQuotient(((2, 2), (1, -1)), Monomial(Cyc8(-2), Fraction(-1, 2)))
    quarter_series = theta_series_at_torsion(quarter, order)
    half_series = theta_series_at_torsion(half, order)
    findings = [
        _series_match("theta(tau/2+1/4)", quarter_series, quarter_quotient.series(order)),
        _series_match("theta(tau+1/2)", half_series, half_quotient.series(order)),
        _series_match(
            "theta(tau+3/2)", theta_series_at_torsion(half.shift(0, 1), order), half_series.scale(-1)
        ),
        _series_match(
            "theta(tau/2+3/4)",
            theta_series_at_torsion(quarter.shift(0, Fraction(1, 2)), order),
            quarter_series.scale(-Cyc8.zeta8(2)),
        ),
    ]
    mu_points = (_TORSION_SAMPLES[1], quarter)
    mu_series = mu_torsion_series(*mu_points, order)
    ctx = context.context()
    one = ctx.mpf(1)
    for tau in context.taus(ctx):
        at_half = R_numeric(tau + one / 2, tau, ctx)
        expected = 2 * ctx.j * ctx.expjpi(3 * tau / 4)
        findings.append(context.finding("R(tau+1/2)", relative_residual(at_half, expected, ctx)))
        at_three_halves = R_numeric(tau + 3 * one / 2, tau, ctx)
        findings.append(context.finding("R(tau+3/2)", relative_residual(at_three_halves, -at_half, ctx)))
        at_quarter = R_torsion_numeric(quarter, tau, ctx)
        expected = ctx.j * R_numeric(tau / 2 + 3 * one / 4, tau, ctx) - 2 * ctx.expjpi(-3 * one / 4 + tau / 4)
        findings.append(context.finding("R(tau/2+1/4)", relative_residual(at_quarter, expected, ctx)))
        holomorphic, remainder = R_holo_split(tau, ctx)
        findings.append(
            context.finding("R(tau/2+1/4) split", relative_residual(at_quarter, holomorphic + remainder, ctx))
        )
        numeric = theta_numeric(quarter.to_complex(tau, ctx), tau, ctx)
        quotient = quarter_quotient.numeric(tau, ctx)
        residual = relative_residual(numeric, quotient, ctx)
        findings.append(context.finding("theta(tau/2+1/4) numeric", residual))
        summed = mu_series.evaluate(tau, ctx)
        direct = mu_torsion_numeric(*mu_points, tau, ctx)
        findings.append(context.finding("mu torsion expansion", relative_residual(summed, direct, ctx)))
        closed = dtaubar_R_numeric(Fraction(-1, 2), Fraction(-1, 4), tau, ctx)
        stencil = dtaubar_fd(
            lambda point: R_numeric(-point / 2 - one / 4, point, ctx), tau, ctx, context.fd_step
        )
        residual = relative_residual(stencil.value, closed, ctx)
        findings.append(context.finding("tau-bar derivative of R(-tau/2-1/4)", residual, 1e-6))
    return findings


@identity(
    "rstar-laws",
    "Fhat - F = R*, the closed form of R* at z1 = 0 and the R* shift in z1",
    tolerance=1e-20,
    tau_points=("0.17,1.05", "-0.23,1.07"),
    numeric=True,
)
def _rstar_laws(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    nodes = context.nodes
    rng = random.Random(SEED + 3)
    findings = []
    for tau in context.taus(ctx):
        label = _label(ctx, tau)
        z1, z2, z3 = _generic_points(rng, ctx, tau, 3, 0.4)
        difference = Fhat_numeric(z1, z2, z3, tau, ctx) - F_mu_numeric(z1, z2, z3, tau, ctx)
        rstar = Rstar_numeric(z1, z2, z3, tau, ctx)
        findings.append(context.finding(f"Fhat - F tau={label}", relative_residual(difference, rstar, ctx)))
        limit = Rstar_zero_limit_residual(z2, z3, tau, ctx, nodes)
        findings.append(context.finding(f"R*(0) tau={label}", limit))
        shift = Rstar_shift_residual(z2, z3, tau, ctx, nodes)
        findings.append(context.finding(f"R*(tau) tau={label}", shift))
    return findings


_HHAT_Z: Final = ((0.13, 0.07), (-0.21, 0.11))


@identity(
    "hhat-modular",
    "Hhat transforms with weight 3/2 on Gamma",
    tolerance=1e-15,
    tau_points=("0.11,0.93",),
    matrices=("7,5,4,3", "1,2,0,1"),
    numeric=True,
    slow=True,
)
def _hhat_modular(context: CheckContext) -> list[Finding]:
    work = context.guarded()
    findings = []
    for tau in context.taus(work):
        for x, y in _HHAT_Z:
            for element in context.elements:
                residual = Hhat_transform_residual(element, work.mpc(x, y), tau, work)
                findings.append(context.finding(f"M={element} z={x}+{y}i", residual))
    return findings


@identity(
    "hhat-shift",
    "Hhat(z + tau) through the conjugate sum of Fhat",
    tolerance=1e-20,
    tau_points=("0.17,1.05",),
    numeric=True,
)
def _hhat_shift(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    return [
        context.finding(f"z={x}+{y}i tau={_label(ctx, tau)}", Hhat_shift_residual(ctx.mpc(x, y), tau, ctx))
        for tau in context.taus(ctx)
        for x, y in _HHAT_Z
    ]


_FHAT_SHIFTS: Final = (
    (1, 0, 0, 0, 0, 0),
    (0, 1, 0, 0, 0, 0),
    (0, 0, 1, 0, 0, 0),
    (0, 0, 0, 0, 1, 1),
    (1, 0, 1, 0, 1, 0),
)


@identity(
    "fhat-laws",
    "Fhat elliptic law in every variable and its weight 3/2 modular law",
    tolerance=1e-20,
    tau_points=("0.17,1.05",),
    matrices=S_AND_T,
    numeric=True,
)
def _fhat_laws(context: CheckContext) -> list[Finding]:
    work = context.guarded()
    rng = random.Random(SEED + 4)
    findings = []
    for tau in context.taus(work):
        z = tuple(_generic_points(rng, work, tau, 3, 0.4))
        for shifts in _FHAT_SHIFTS:
            findings.append(context.finding(f"shift {shifts}", Fhat_elliptic_residual(z, shifts, tau, work)))
        for element in context.elements:
            findings.append(context.finding(f"M={element}", Fhat_transform_residual(element, z, tau, work)))
    return findings


@identity(
    "fcal-constant",
    "Fcal(0) = -i eta^3 q^(-1/8)/theta(tau/2+1/4) and the vanishing constant term",
    tolerance=1e-20,
    numeric=True,
)
def _fcal_constant(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    findings = []
    for tau in context.taus(ctx):
        label = _label(ctx, tau)
        value = Fcal_jet(ctx.mpc(0), tau, ctx, 0, context.nodes).value
        findings.append(
            context.finding(f"Fcal(0) tau={label}", relative_residual(value, Fcal_zero_closed(tau, ctx), ctx))
        )
        theta = theta_numeric(tau / 2 + ctx.mpf(1) / 4, tau, ctx)
        constant = value**2 + eta_numeric(tau, ctx) ** 6 * ctx.expjpi(-tau / 2) / theta**2
        findings.append(context.finding(f"constant term tau={label}", abs(constant) / abs(value) ** 2))
    return findings


@identity(
    "fcal2-shadow",
    "tau-bar derivative of Fcal''(0)",
    tolerance=1e-6,
    numeric=True,
)
def _fcal2_shadow(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    findings = []
    for tau in context.taus(ctx):
        label = _label(ctx, tau)
        derivative = dtaubar_fd(_fcal_derivative(2, context.nodes, ctx), tau, ctx, context.fd_step).value
        closed = dtaubar_fcal2_closed(tau, ctx)
        findings.append(
            context.finding(f"finite differences tau={label}", relative_residual(derivative, closed, ctx))
        )
        _, series = dtaubar_fcal_series(tau, ctx)
        findings.append(context.finding(f"series tau={label}", relative_residual(series, closed, ctx), 1e-20))
        printed = dtaubar_fcal2_closed(tau, ctx, printed=True)
        findings.append(
            context.advisory(f"printed eta quotient tau={label}", relative_residual(derivative, printed, ctx))
        )
    return findings


_F1_HOLOMORPHIC: Final[EtaQuotient] = EtaQuotient(((4, 3),))
_F3: Final[EtaQuotient] = EtaQuotient(((4, 1), (2, -2)))
_F4_HOLOMORPHIC: Final[EtaQuotient] = EtaQuotient(((2, 5), (1, -2), (4, -2)))


@identity(
    "f-multipliers",
    "f1, f2, f3, f4 transform with the multipliers chi_1, chi_2, chi_3, chi_4",
    tolerance=1e-15,
    tau_points=("0.11,0.93",),
    matrices=("7,5,4,3", "11,-1,12,-1", "13,8,8,5"),
    numeric=True,
)
def _f_multipliers(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    nodes = context.nodes
    laws = (
        (1, Fraction(3, 2), _F1_HOLOMORPHIC.numeric),
        (2, Fraction(1, 2), lambda tau, work: f_family_numeric(2, tau, work, nodes)),
        (3, Fraction(-1, 2), _F3.numeric),
        (4, Fraction(1, 2), _F4_HOLOMORPHIC.numeric),
    )
    findings = []
    for tau in context.taus(ctx):
        v, reflected = tau.imag, -ctx.conj(tau)
        unwound = v ** (-ctx.mpf(3) / 2) * f_family_numeric(1, reflected, ctx)
        residual = relative_residual(unwound, _F1_HOLOMORPHIC.numeric(tau, ctx), ctx)
        findings.append(context.finding("f1 reflection", residual))
        unwound = v ** (-ctx.mpf(1) / 2) * f_family_numeric(4, reflected, ctx)
        residual = relative_residual(unwound, _F4_HOLOMORPHIC.numeric(tau, ctx), ctx)
        findings.append(context.finding("f4 reflection", residual))
        for element in context.elements:
            for k, weight, evaluator in laws:
                residual = weight_transform_residual(
                    evaluator,
                    weight,
                    lambda item, k=k: chi_multiplier(k, item),
                    element,
                    tau,
                    ctx,
                    context.guard_bits,
                )
                findings.append(context.finding(f"f{k} M={element}", residual))
    return findings


_HARMONIC_DATA: Final = ((Fraction(1, 4), Fraction(1, 8), Fraction(-1, 3), Fraction(1, 5)),)


def _mu_hat_torsion(
    a1: Fraction, b1: Fraction, a2: Fraction, b2: Fraction
) -> Callable[[Number, MPContext], Number]:
    """tau -> q^(-a^2/2) mu-hat(a1 tau + b1, a2 tau + b2; tau) with a = a1 - a2."""
    a = a1 - a2

    def evaluate(tau: Number, ctx: MPContext) -> Number:
        def point(x: Fraction, y: Fraction) -> Number:
            return ctx.mpf(x.numerator) / x.denominator * tau + ctx.mpf(y.numerator) / y.denominator

        prefactor = ctx.expjpi(-ctx.mpf(a.numerator**2) / a.denominator**2 * tau)
        return prefactor * mu_hat_numeric(point(a1, b1), point(a2, b2), tau, ctx)

    return evaluate


@identity(
    "mu-harmonic",
    "the weight 1/2 Laplacian annihilates mu-hat at torsion points and eta",
    tolerance=1e-5,
    numeric=True,
)
def _mu_harmonic(context: CheckContext) -> list[Finding]:
    ctx = context.context()
    step = context.fd_step_laplacian
    half = Fraction(1, 2)
    findings = []
    for tau in context.taus(ctx):
        label = _label(ctx, tau)
        for data in _HARMONIC_DATA:
            evaluate = _mu_hat_torsion(*data)
            laplacian = laplacian_fd(lambda point: evaluate(point, ctx), half, tau, ctx, step)
            scale = max(1, abs(evaluate(tau, ctx)))
            name = ", ".join(str(x) for x in data)
            findings.append(context.finding(f"mu-hat({name}) tau={label}", abs(laplacian.value) / scale))
        laplacian = laplacian_fd(lambda point: eta_numeric(point, ctx), half, tau, ctx, step)
        scale = max(1, abs(eta_numeric(tau, ctx)))
        findings.append(context.finding(f"eta tau={label}", abs(laplacian.value) / scale))
    return findings


def _random_series(rng: random.Random, order: int, terms: int = 6) -> QSeries:
    coefficients = {}
    for _ in range(terms):
        exponent = Fraction(rng.randint(1, 4 * order), 4)
        coefficients[exponent] = Cyc8(rng.randint(-3, 3), rng.randint(-2, 2), 0, rng.randint(-1, 1))
    coefficients[Fraction(0)] = Cyc8(rng.choice((1, -1, 2)))
    return QSeries.from_terms(coefficients, order)


def _random_jacobi(rng: random.Random, order: int, terms: int = 6) -> JacobiSeries:
    entries = []
    for _ in range(terms):
        coefficient = Cyc8(rng.randint(-2, 2), rng.randint(-1, 1))
        entries.append((Fraction(rng.randint(0, 2 * order), 2), rng.randint(0, 2), coefficient))
    return JacobiSeries.from_terms(entries)


@identity("exact-kernel", "ring axioms, inversion and substitution on seeded random series", order=20)
def _exact_kernel(context: CheckContext) -> list[Finding]:
    rng = random.Random(SEED + 5)
    order = context.order
    value = Monomial(ONE, Fraction(1, 2))
    findings = []
    for round_index in range(1, 6):
        a, b, c = (_random_series(rng, order) for _ in range(3))
        label = f"round {round_index}"
        findings.append(_series_match(f"{label} commutativity", a * b, b * a))
        findings.append(_series_match(f"{label} associativity", (a * b) * c, a * (b * c)))
        findings.append(_series_match(f"{label} distributivity", a * (b + c), a * b + a * c))
        findings.append(_series_match(f"{label} inverse", a * a.invert(order), QSeries.one(order)))
        x, y = _random_jacobi(rng, 6), _random_jacobi(rng, 6)
        product = (x * y).substitute(value).truncate(order)
        separate = (x.substitute(value) * y.substitute(value)).truncate(order)
        findings.append(_series_match(f"{label} substitution", product, separate))
    return findings


@identity(
    "pbar-g-derivative",
    "pbar_omega(q) from zeta-derivatives of G and from the double-sum limit",
    order=30,
)
def _pbar_g_derivative(context: CheckContext) -> list[Finding]:
    order = context.order
    definition = pbar_omega_series(order, "definition")
    return [
        _series_match("G derivative", definition, pbar_omega_series(order, "g_derivative")),
        _series_match("zeta -> 1 limit", definition, pbar_omega_series(order, "zeta_limit")),
    ]


@identity(
    "group-closure",
    "Gamma inside Gamma0(4) inside SL2(Z) under products, and the cocycle of psi",
    tolerance=1e-30,
    tau_points=("0.11,0.93",),
    numeric=True,
)
def _group_closure(context: CheckContext) -> list[Finding]:
    rng = random.Random(SEED + 6)
    members = list(random_gamma_elements(rng, 21))
    findings = []
    for first, second in zip(members, members[1:]):
        product = first * second
        closed = group_membership(product) is GroupClass.GAMMA and in_gamma0_4(product)
        findings.append(context.finding(f"{first} * {second}", 0 if closed else 1, EXACT_TOLERANCE))
    ctx = context.context()
    half = Fraction(1, 2)
    pairs = list(random_sl2z_elements(rng, 20))
    for tau in context.taus(ctx):
        for first, second in zip(pairs[0::2], pairs[1::2]):
            product = first * second
            left = psi_multiplier(product).value(ctx) * automorphy_factor(product, tau, half, ctx)
            right = psi_multiplier(first).value(ctx) * automorphy_factor(first, second.act(tau), half, ctx)
            right *= psi_multiplier(second).value(ctx) * automorphy_factor(second, tau, half, ctx)
            findings.append(context.finding(f"cocycle {first} {second}", relative_residual(left, right, ctx)))
    return findings

import logging
import math
from fractions import Fraction

from mpmath.ctx_mp import MPContext

from .classical import TorsionPoint, eta_numeric, theta_jet, theta_numeric, theta_series_at_torsion
from .exactalg import Cyc8, QSeries, Rational, expand_with_slack
from .exceptions import (
    DivisionByZero,
    NonInvertibleLeadingTerm,
    PoleProximity,
    SpecializationPole,
)
from .modular import GroupElement, automorphy_factor, psi_multiplier
from .numeric import Jet, Number, contour_jet, contour_radius, rational, relative_residual, summation_window

logger = logging.getLogger(__name__)


def _pole_threshold(ctx: MPContext) -> Number:
    return ctx.ldexp(1, -(ctx.prec // 2))


def E_numeric(w: Number, ctx: MPContext) -> Number:
    """E(w) = 2 int_0^w e^(-pi t^2) dt = erf(sqrt(pi) w)."""
    return ctx.erf(ctx.sqrt(ctx.pi) * w)


def sign_minus_E(sign: int, w: Number, ctx: MPContext) -> Number:
    """sgn - E(w), through erfc when both have the same sign."""
    if w and (w > 0) == (sign > 0):
        return sign * ctx.erfc(ctx.sqrt(ctx.pi) * abs(w))
    return sign - E_numeric(w, ctx)


def _r_window(z: Number, tau: Number, ctx: MPContext) -> range:
    v = tau.imag
    center = -z.imag / v
    half = ctx.mpf(1) / 2
    return summation_window(ctx, v, min(0, center) - half, max(0, center) - half)


def R_jet(z: Number, tau: Number, ctx: MPContext, order: int = 2) -> Jet:
    """R(z) = sum_{nu in 1/2+Z} (sgn nu - E((nu + y/v) sqrt(2v))) (-1)^(nu-1/2) q^(-nu^2/2) zeta^(-nu), with
    Wirtinger derivatives d/dz up to the given order."""
    if order > 2:
        raise ValueError(f"R jets are available up to order 2, got {order}")
    v, y = tau.imag, z.imag
    root = ctx.sqrt(2 * v)
    total = Jet([0] * (order + 1))
    for m in _r_window(z, tau, ctx):
        nu = m + ctx.mpf(1) / 2
        sign = 1 if nu > 0 else -1
        w = (nu + y / v) * root
        gauss = ctx.exp(-ctx.pi * w * w)
        derivatives = [
            sign_minus_E(sign, w, ctx),
            ctx.j * ctx.sqrt(2 / v) * gauss,
            -2 * ctx.pi * w / v * gauss,
        ]
        weight = Jet(derivatives[: order + 1])
        exponential = (-1 if m % 2 else 1) * ctx.expjpi(-nu * nu * tau - 2 * nu * z)
        total = total + weight * Jet.exponential(exponential, -2 * ctx.pi * ctx.j * nu, order)
    return total


def R_numeric(z: Number, tau: Number, ctx: MPContext) -> Number:
    v, y = tau.imag, z.imag
    root = ctx.sqrt(2 * v)
    terms = []
    for m in _r_window(z, tau, ctx):
        nu = m + ctx.mpf(1) / 2
        weight = sign_minus_E(1 if nu > 0 else -1, (nu + y / v) * root, ctx)
        terms.append((-1 if m % 2 else 1) * weight * ctx.expjpi(-nu * nu * tau - 2 * nu * z))
    return ctx.fsum(terms)


def mu_numeric(z1: Number, z2: Number, tau: Number, ctx: MPContext) -> Number:
    """mu(z1, z2) = e^(pi i z1)/theta(z2) sum_n (-1)^n e^(2 pi i n z2) q^((n^2+n)/2) / (1 - e^(2 pi i z1) q^n)

    Raises PoleProximity when z2 or z1 sits on a lattice point to working precision.
    """
    v = tau.imag
    threshold = _pole_threshold(ctx)
    theta = theta_numeric(z2, tau, ctx)
    if abs(theta) < threshold:
        raise PoleProximity(f"theta({z2}) vanishes to working precision")
    zeta1 = ctx.expjpi(2 * z1)
    terms = []
    for n in summation_window(ctx, v, -z2.imag / v, spread=float(abs(z1.imag) / v) + 3):
        denominator = 1 - zeta1 * ctx.expjpi(2 * n * tau)
        if abs(denominator) < threshold:
            raise PoleProximity(f"mu({z1}, {z2}) has a pole at the n={n} term")
        terms.append((-1 if n % 2 else 1) * ctx.expjpi(2 * n * z2 + (n * n + n) * tau) / denominator)
    return ctx.expjpi(z1) / theta * ctx.fsum(terms)


def mu_hat_numeric(z1: Number, z2: Number, tau: Number, ctx: MPContext) -> Number:
    return mu_numeric(z1, z2, tau, ctx) + ctx.j / 2 * R_numeric(z1 - z2, tau, ctx)


def theta_mu_jet(
    z1: Number, z2: Number, tau: Number, ctx: MPContext, order: int = 2, nodes: int = 64
) -> Jet:
    """Jet in z1 of theta(z1) mu(z1, z2), holomorphic in z1 once z2 is fixed."""
    return contour_jet(
        lambda z: theta_numeric(z, tau, ctx) * mu_numeric(z, z2, tau, ctx),
        z1,
        contour_radius(tau.imag),
        ctx,
        order,
        nodes,
    )


def mu_elliptic_residuals(z1: Number, z2: Number, tau: Number, ctx: MPContext) -> dict[str, Number]:
    """Residuals of the translation, symmetry and parity laws of mu."""
    mu = mu_numeric(z1, z2, tau, ctx)
    difference = z1 - z2
    shifted = -ctx.expjpi(2 * difference + tau) * mu - ctx.j * ctx.expjpi(difference + 3 * tau / 4)
    return {
        "mu(z1+1)": relative_residual(mu_numeric(z1 + 1, z2, tau, ctx), -mu, ctx),
        "mu(z1+tau)": relative_residual(mu_numeric(z1 + tau, z2, tau, ctx), shifted, ctx),
        "symmetry": relative_residual(mu_numeric(z2, z1, tau, ctx), mu, ctx),
        "parity": relative_residual(mu_numeric(-z1, -z2, tau, ctx), mu, ctx),
    }


def R_law_residuals(z: Number, tau: Number, ctx: MPContext) -> dict[str, Number]:
    r = R_numeric(z, tau, ctx)
    shifted = -ctx.expjpi(2 * z + tau) * r + 2 * ctx.expjpi(z + 3 * tau / 4)
    return {
        "R(z+1)": relative_residual(R_numeric(z + 1, tau, ctx), -r, ctx),
        "R(z+tau)": relative_residual(R_numeric(z + tau, tau, ctx), shifted, ctx),
        "R(-z)": relative_residual(R_numeric(-z, tau, ctx), r, ctx),
    }


def mu_hat_elliptic_residual(
    z1: Number, z2: Number, shifts: tuple[int, int, int, int], tau: Number, ctx: MPContext
) -> Number:
    """mu^(z1 + r1 tau + s1, z2 + r2 tau + s2) = (-1)^(r1+s1+r2+s2) e^(pi i r^2 tau + 2 pi i r (z1 - z2)) mu^,
    with r = r1 - r2."""
    r1, s1, r2, s2 = shifts
    r = r1 - r2
    left = mu_hat_numeric(z1 + r1 * tau + s1, z2 + r2 * tau + s2, tau, ctx)
    sign = -1 if (r1 + s1 + r2 + s2) % 2 else 1
    right = sign * ctx.expjpi(r * r * tau + 2 * r * (z1 - z2)) * mu_hat_numeric(z1, z2, tau, ctx)
    return relative_residual(left, right, ctx)


def mu_hat_transform_residual(
    element: GroupElement, z1: Number, z2: Number, tau: Number, ctx: MPContext
) -> Number:
    """mu^(z1/(c tau + d), z2/(c tau + d); M tau)
    = psi^-3 (c tau + d)^(1/2) e^(-pi i c (z1-z2)^2/(c tau + d)) mu^(z1, z2; tau)."""
    factor = element.automorphy(tau)
    left = mu_hat_numeric(z1 / factor, z2 / factor, element.act(tau), ctx)
    right = (
        (psi_multiplier(element) ** -3).value(ctx)
        * automorphy_factor(element, tau, Fraction(1, 2), ctx)
        * ctx.expjpi(-element.c * (z1 - z2) ** 2 / factor)
        * mu_hat_numeric(z1, z2, tau, ctx)
    )
    return relative_residual(left, right, ctx)


def theta_law_residuals(z: Number, tau: Number, ctx: MPContext) -> dict[str, Number]:
    theta = theta_numeric(z, tau, ctx)
    jet = theta_jet(ctx.mpc(0), tau, ctx, order=1)
    eta_cubed = eta_numeric(tau, ctx) ** 3
    return {
        "theta(-z)": relative_residual(theta_numeric(-z, tau, ctx), -theta, ctx),
        "theta(z+1)": relative_residual(theta_numeric(z + 1, tau, ctx), -theta, ctx),
        "theta(z+tau)": relative_residual(
            theta_numeric(z + tau, tau, ctx), -ctx.expjpi(-tau - 2 * z) * theta, ctx
        ),
        "theta'(0)": relative_residual(jet.derivative(1), -2 * ctx.pi * eta_cubed, ctx),
    }


def _convex_range(valuation, order: Fraction, start: int) -> list[int]:
    """Integers n with valuation(n) < order, for a convex valuation, scanning outward from start."""
    found = []
    for direction in (1, -1):
        n = start if direction == 1 else start - 1
        while True:
            current = valuation(n)
            if current < order:
                found.append(n)
            elif valuation(n + direction) >= current:
                break
            n += direction
    return sorted(found)


def mu_torsion_series(z1: TorsionPoint, z2: TorsionPoint, order: Rational) -> QSeries:
    """q-expansion of mu(a1 tau + b1, a2 tau + b2) to O(q^order)."""
    order = Fraction(order)

    def valuation(n: int) -> Fraction:
        return Fraction(n * n + n, 2) + n * z2.a + max(Fraction(0), -(n + z1.a))

    def build(work: Fraction) -> QSeries:
        theta = theta_series_at_torsion(z2, work)
        if not theta:
            raise SpecializationPole(f"theta({z2}) vanishes identically")
        inverse = theta.invert(work)
        lead = -_lead(inverse)
        inner = work + abs(lead) + abs(z1.a)
        total = QSeries.zero(inner)
        for n in _convex_range(valuation, inner, math.floor(-z2.a)):
            coefficient = Cyc8(-1 if n % 2 else 1) * Cyc8.root_of_unity(n * z2.b)
            term = QSeries.from_terms({Fraction(n * n + n, 2) + n * z2.a: coefficient}, inner)
            total = total + term.div_binomial(Cyc8.root_of_unity(z1.b), n + z1.a)
        prefactor = QSeries.from_terms({z1.a / 2: Cyc8.root_of_unity(z1.b / 2)}, inner)
        return total * prefactor * inverse

    try:
        return expand_with_slack(build, order)
    except (DivisionByZero, NonInvertibleLeadingTerm) as error:
        raise SpecializationPole(f"mu({z1}, {z2}) has a pole: {error}") from error


def _lead(series: QSeries) -> Fraction:
    items = series.items()
    return items[0][0] if items else Fraction(0)


def dtaubar_R_numeric(a: Rational, b: Rational, tau: Number, ctx: MPContext) -> Number:
    """d/d(tau bar) of tau -> R(a tau + b; tau) for real a, b."""
    v = tau.imag
    ar, br = rational(ctx, a), rational(ctx, b)
    tau_bar = ctx.conj(tau)
    terms = []
    for m in summation_window(ctx, v, -ar - ctx.mpf(1) / 2):
        n = m + ctx.mpf(1) / 2
        phase = ctx.expjpi(-n * n * tau_bar - 2 * n * (ar * tau_bar + br))
        terms.append((1 if m % 2 else -1) * (n + ar) * phase)
    return ctx.j / ctx.sqrt(2 * v) * ctx.exp(-2 * ctx.pi * ar * ar * v) * ctx.fsum(terms)


def dz_dtaubar_R_numeric(a: Rational, b: Rational, tau: Number, ctx: MPContext) -> Number:
    """d/d(tau bar) of tau -> (dR/dz)(a tau + b; tau) for real a, b."""
    v = tau.imag
    ar, br = rational(ctx, a), rational(ctx, b)
    tau_bar = ctx.conj(tau)
    terms = []
    for m in summation_window(ctx, v, -ar - ctx.mpf(1) / 2):
        n = m + ctx.mpf(1) / 2
        terms.append(
            (-1 if m % 2 else 1)
            * (1 / v + 4 * ctx.pi * ar * (ar + n))
            * ctx.expjpi(-n * n * tau_bar - 2 * n * (ar * tau_bar + br))
        )
    return ctx.exp(-2 * ctx.pi * ar * ar * v) / (2 * ctx.sqrt(2 * v)) * ctx.fsum(terms)


def R_holo_split(tau: Number, ctx: MPContext) -> tuple[Number, Number]:
    """R(tau/2 + 1/4) = e^(pi i/4) q^(1/8) + N(tau), the second part decaying like e^(-pi v)."""
    v = tau.imag
    root = ctx.sqrt(2 * ctx.pi * v)
    holomorphic = ctx.expjpi(ctx.mpf(1) / 4 + tau / 4)
    terms = []
    for m in summation_window(ctx, v, -ctx.mpf(1)):
        if m == -1:
            continue
        nu = m + ctx.mpf(1) / 2
        sign = 1 if nu > 0 else -1
        phase = ctx.expjpi(-nu * nu * tau - nu * tau - nu / 2)
        terms.append(sign * (-1 if m % 2 else 1) * ctx.erfc(root * abs(nu + ctx.mpf(1) / 2)) * phase)
    return holomorphic, ctx.fsum(terms)


def R_torsion_numeric(z: TorsionPoint, tau: Number, ctx: MPContext) -> Number:
    return R_numeric(z.to_complex(tau, ctx), tau, ctx)


def mu_torsion_numeric(z1: TorsionPoint, z2: TorsionPoint, tau: Number, ctx: MPContext) -> Number:
    return mu_numeric(z1.to_complex(tau, ctx), z2.to_complex(tau, ctx), tau, ctx)

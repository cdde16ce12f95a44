from fractions import Fraction

import pytest

from pbar_omega.combinatorics import Family, Side, genfun
from pbar_omega.exceptions import DomainViolation, UnboundedCone
from pbar_omega.indefinite import (
    PBAR_ROUTES,
    Cone,
    ConeSumSpec,
    F_cone_numeric,
    F_mu_numeric,
    Fcal_numeric,
    Fcal_zero_closed,
    Fcal_derivs,
    Fcal_jet,
    Fhat_numeric,
    JacobiArgument,
    PhatContext,
    Rstar_numeric,
    cone_sum_numeric,
    cone_sum_series,
    f_family_numeric,
    family_series,
    pbar_omega_series,
    pwz_coefficient,
    pwz_identity_check,
    pstar_series,
)
from pbar_omega.models import Status
from pbar_omega.numeric import UHPoint, fd_partials, make_context, relative_residual

TRIANGULAR = ConeSumSpec({(0, 0): Fraction(1, 2)}, (Fraction(1, 2),), (Cone((0,)),))


@pytest.fixture
def ctx():
    return make_context(128)


@pytest.fixture
def tau(ctx):
    return ctx.mpc("0.17", "1.05")


class TestCone:
    def test_index(self) -> None:
        assert Cone((0, -1, -1), -1).index((1, 2, 0)) == (-1, -3, -1)

    def test_direction(self) -> None:
        with pytest.raises(DomainViolation):
            Cone((0,), 2)


class TestConeSumSpec:
    def test_per_variable_lengths(self) -> None:
        with pytest.raises(DomainViolation):
            ConeSumSpec({(0, 0): 1}, (0,), (Cone((0, 0)),))

    def test_negative_quadratic_form(self) -> None:
        with pytest.raises(UnboundedCone):
            ConeSumSpec({(0, 0): -1}, (0,), (Cone((0,)),))

    def test_flat_direction(self) -> None:
        with pytest.raises(UnboundedCone):
            ConeSumSpec({}, (0,), (Cone((0,)),))

    def test_exponent(self) -> None:
        assert TRIANGULAR.exponent((3,)) == 6


class TestConeSumSeries:
    def test_triangular_numbers(self) -> None:
        series = cone_sum_series(TRIANGULAR, 10).zeta_coefficient(0)
        assert series.integer_coefficients() == {0: 1, 1: 1, 3: 1, 6: 1}

    def test_zeta_grading(self) -> None:
        series = cone_sum_series(TRIANGULAR, 10, [JacobiArgument(1)])
        assert series.zeta_coefficient(2).integer_coefficients() == {3: 1}
        assert not series.zeta_coefficient(1).integer_coefficients().get(3)

    def test_weight(self) -> None:
        spec = ConeSumSpec({(0, 0): Fraction(1, 2)}, (Fraction(1, 2),), (Cone((0,)),), weight=lambda x: x[0])
        assert cone_sum_series(spec, 10).zeta_coefficient(0).integer_coefficients() == {1: 1, 3: 2, 6: 3}

    def test_with_linear(self) -> None:
        series = cone_sum_series(TRIANGULAR.with_linear((1,)), 10).zeta_coefficient(0)
        assert series.integer_coefficients() == {0: 1, 2: 1, 5: 1, 9: 1}

    def test_argument_count(self) -> None:
        with pytest.raises(DomainViolation):
            cone_sum_series(TRIANGULAR, 10, [JacobiArgument(), JacobiArgument()])

    def test_numeric(self, ctx, tau) -> None:
        w = ctx.mpf("0.1")
        expected = ctx.fsum(ctx.expjpi(t * (t + 1) * tau + 2 * t * w) for t in range(40))
        assert relative_residual(cone_sum_numeric(TRIANGULAR, (w,), tau, ctx), expected, ctx) < ctx.mpf(
            "1e-30"
        )


class TestPbarOmegaSeries:
    @pytest.mark.parametrize("route", ["triple_sum", "oracle", "g_derivative", "zeta_limit"])
    def test_routes_agree(self, route: str) -> None:
        order = 12
        assert pbar_omega_series(order, route).agrees_with(pbar_omega_series(order, "definition"))

    def test_first_coefficient(self) -> None:
        assert pbar_omega_series(10).coefficient(1) == 1

    def test_low_order(self) -> None:
        for route in PBAR_ROUTES:
            assert not pbar_omega_series(1, route)

    def test_unknown_route(self) -> None:
        with pytest.raises(DomainViolation):
            pbar_omega_series(10, "guess")

    @pytest.mark.slow
    def test_triple_sum_to_sixty(self) -> None:
        assert pbar_omega_series(60).agrees_with(pbar_omega_series(60, "definition"))


class TestClearedIdentity:
    def test_check(self) -> None:
        assert pwz_identity_check(12).status is Status.PASS

    @pytest.mark.parametrize("j", [1, 2])
    def test_zeta_coefficient(self, j: int) -> None:
        assert pstar_series(10).zeta_coefficient(j).agrees_with(pwz_coefficient(j, 10))


class TestNumericForms:
    def _points(self, ctx, tau):
        return (
            ctx.mpf("0.13") + ctx.mpf("0.21") * tau,
            ctx.mpf("0.37") + ctx.mpf("0.29") * tau,
            ctx.mpf("-0.19") + ctx.mpf("0.17") * tau,
        )

    def test_cone_sum_against_appell_form(self, ctx, tau) -> None:
        z1, z2, z3 = self._points(ctx, tau)
        cone = F_cone_numeric(z1, z2, z3, tau, ctx)
        assert relative_residual(cone, F_mu_numeric(z1, z2, z3, tau, ctx), ctx) < ctx.mpf("1e-20")

    def test_completion_difference(self, ctx, tau) -> None:
        z1, z2, z3 = self._points(ctx, tau)
        difference = Fhat_numeric(z1, z2, z3, tau, ctx) - F_mu_numeric(z1, z2, z3, tau, ctx)
        assert relative_residual(difference, Rstar_numeric(z1, z2, z3, tau, ctx), ctx) < ctx.mpf("1e-20")

    def test_fcal_at_zero(self, ctx, tau) -> None:
        value = Fcal_numeric(ctx.mpc(0), tau, ctx)
        assert relative_residual(value, Fcal_zero_closed(tau, ctx), ctx) < ctx.mpf("1e-20")

    def test_unknown_f_family(self, ctx, tau) -> None:
        with pytest.raises(DomainViolation):
            f_family_numeric(5, tau, ctx)


class TestPhatContext:
    def test_radius(self) -> None:
        with pytest.raises(DomainViolation):
            PhatContext(UHPoint(0, 1), 128, radius=0.6)

    def test_nodes(self) -> None:
        with pytest.raises(DomainViolation):
            PhatContext(UHPoint(0, 1), 128, nodes=4)

    def test_context(self) -> None:
        assert PhatContext(UHPoint(0, 1), 160).context().prec == 160

    def _fcal_first_derivative_fd(self, tau, ctx):
        # Wirtinger d/dz = (d/dx - i d/dy)/2, stencil centred at z = 0 through the shift by i
        partials = fd_partials(lambda w: Fcal_numeric(w - ctx.j, tau, ctx), ctx.mpc(0, 1), ctx, 1e-3)
        return (partials["u"].value - ctx.j * partials["v"].value) / 2

    def test_derivatives_match_jet(self) -> None:
        context = PhatContext(UHPoint.parse("0.17,1.05"), 128)
        ctx = context.context()
        jet = Fcal_jet(ctx.mpc(0), context.tau.to_complex(ctx), ctx, 2, context.nodes)
        first, second = Fcal_derivs(context)
        assert relative_residual(first, jet.derivative(1), ctx) < ctx.mpf("1e-25")
        assert relative_residual(second, jet.derivative(2), ctx) < ctx.mpf("1e-25")

    def test_derivatives_on_explicit_contour(self) -> None:
        default = PhatContext(UHPoint.parse("0.17,1.05"), 128)
        explicit = PhatContext(UHPoint.parse("0.17,1.05"), 128, nodes=128, radius=0.1)
        ctx = default.context()
        for left, right in zip(Fcal_derivs(default), Fcal_derivs(explicit)):
            assert relative_residual(left, right, ctx) < ctx.mpf("1e-20")

    @pytest.mark.parametrize("radius", [None, 0.1])
    def test_first_derivative_against_finite_differences(self, radius) -> None:
        context = PhatContext(UHPoint.parse("0.17,1.05"), 128, nodes=128, radius=radius)
        ctx = context.context()
        first, _ = Fcal_derivs(context)
        stencil = self._fcal_first_derivative_fd(context.tau.to_complex(ctx), ctx)
        assert abs(first - stencil) < 1e-8 * max(1, abs(first))


class TestFamilySeries:
    def test_pbar_omega_appell_side(self) -> None:
        appell = family_series(Family.PBAR_OMEGA, 12, Side.APPELL)
        assert appell.agrees_with(family_series(Family.PBAR_OMEGA, 12))

    @pytest.mark.parametrize("family", [Family.SPT, Family.SPTBAR_OMEGA])
    def test_other_families(self, family: Family) -> None:
        assert family_series(family, 15, Side.APPELL).agrees_with(genfun(family, 15, Side.APPELL))

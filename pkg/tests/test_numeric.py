from fractions import Fraction

import pytest

from pbar_omega.exceptions import (
    ContourThroughPole,
    DomainViolation,
    PoleProximity,
    PrecisionUnreachable,
    StencilThroughSingularity,
)
from pbar_omega.numeric import (
    Jet,
    UHPoint,
    contour_jet,
    dtaubar_fd,
    fd_partials,
    make_context,
    relative_residual,
    summation_window,
    with_guard_bits,
)


@pytest.fixture
def ctx():
    return make_context(128)


class TestContext:
    def test_precision(self) -> None:
        assert make_context(192).prec == 192

    def test_precision_below_double(self) -> None:
        with pytest.raises(DomainViolation):
            make_context(52)

    def test_guard_bits(self, ctx) -> None:
        assert with_guard_bits(ctx, 64).prec == 192
        assert ctx.prec == 128


class TestUHPoint:
    def test_parse(self) -> None:
        point = UHPoint.parse("0.11, 0.93")
        assert point.u == Fraction(11, 100)
        assert point.v == Fraction(93, 100)
        assert str(point) == "0.11,0.93"

    def test_parse_fraction(self) -> None:
        assert UHPoint.parse("1/3,2") == UHPoint(Fraction(1, 3), 2)

    @pytest.mark.parametrize("text", ["0.1,0", "0.1,-1", "abc", "0.1", "1,2,3"])
    def test_parse_invalid(self, text: str) -> None:
        with pytest.raises(DomainViolation):
            UHPoint.parse(text)

    def test_to_complex(self, ctx) -> None:
        value = UHPoint(Fraction(1, 2), 2).to_complex(ctx)
        assert value == ctx.mpc(0.5, 2)


class TestRelativeResidual:
    def test_both_zero(self, ctx) -> None:
        assert relative_residual(ctx.mpf(0), ctx.mpf(0), ctx) == 0

    def test_scaled_by_larger(self, ctx) -> None:
        residual = relative_residual(ctx.mpf(1), ctx.mpf(2), ctx)
        assert residual == ctx.mpf(1) / 2


class TestSummationWindow:
    def test_contains_center(self, ctx) -> None:
        window = summation_window(ctx, ctx.mpf(1), 3)
        assert 3 in window
        assert window.start < 0 < window.stop

    def test_shrinks_with_v(self, ctx) -> None:
        assert len(summation_window(ctx, ctx.mpf(4), 0)) < len(summation_window(ctx, ctx.mpf(1), 0))

    def test_non_positive_v(self, ctx) -> None:
        with pytest.raises(DomainViolation):
            summation_window(ctx, ctx.mpf(0), 0)

    def test_too_close_to_real_axis(self, ctx) -> None:
        with pytest.raises(PrecisionUnreachable):
            summation_window(ctx, ctx.mpf("1e-10"), 0)


class TestJet:
    def test_product_rule(self) -> None:
        product = Jet([1, 2, 3]) * Jet([4, 5, 6])
        assert product.terms == (4, 13, 38)

    def test_exponential(self) -> None:
        assert Jet.exponential(2, 3).terms == (2, 6, 18)

    def test_constant_arithmetic(self) -> None:
        jet = 1 - Jet([2, 3, 4]) * 2
        assert jet.terms == (-3, -6, -8)
        assert jet.order == 2
        assert jet.derivative(1) == -6


class TestContourJet:
    def test_exponential(self, ctx) -> None:
        jet = contour_jet(ctx.exp, ctx.mpf(0), ctx.mpf("0.1"), ctx, order=3)
        assert all(abs(term - 1) < ctx.mpf("1e-30") for term in jet.terms)

    def test_polynomial(self, ctx) -> None:
        center = ctx.mpc(1, 1)
        jet = contour_jet(lambda z: z**3, center, ctx.mpf("0.1"), ctx)
        assert abs(jet.value - center**3) < ctx.mpf("1e-30")
        assert abs(jet.derivative(1) - 3 * center**2) < ctx.mpf("1e-30")
        assert abs(jet.derivative(2) - 6 * center) < ctx.mpf("1e-30")

    def test_pole_on_contour(self, ctx) -> None:
        def func(z):
            raise PoleProximity("pole")

        with pytest.raises(ContourThroughPole):
            contour_jet(func, ctx.mpf(0), ctx.mpf("0.1"), ctx)


class TestFiniteDifferences:
    def test_dtaubar_of_conjugate(self, ctx) -> None:
        tau = ctx.mpc("0.1", "0.9")
        estimate = dtaubar_fd(ctx.conj, tau, ctx, 1e-4)
        assert abs(estimate.value - 1) < ctx.mpf("1e-20")

    def test_dtaubar_of_holomorphic(self, ctx) -> None:
        tau = ctx.mpc("0.1", "0.9")
        estimate = dtaubar_fd(ctx.exp, tau, ctx, 1e-4)
        assert abs(estimate.value) < ctx.mpf("1e-12")

    def test_second_partials(self, ctx) -> None:
        tau = ctx.mpc("0.2", "1.1")
        partials = fd_partials(lambda t: t.imag**2, tau, ctx, 1e-3, second=True)
        assert abs(partials["vv"].value - 2) < ctx.mpf("1e-12")
        assert abs(partials["uu"].value) < ctx.mpf("1e-12")

    def test_stencil_leaves_half_plane(self, ctx) -> None:
        with pytest.raises(StencilThroughSingularity):
            dtaubar_fd(ctx.exp, ctx.mpc("0.1", "0.00005"), ctx, 1e-4)

    def test_stencil_through_pole(self, ctx) -> None:
        def func(tau):
            raise PoleProximity("pole")

        with pytest.raises(StencilThroughSingularity):
            dtaubar_fd(func, ctx.mpc(0, 1), ctx, 1e-4)

import random
from fractions import Fraction

import pytest

from pbar_omega.classical import eta_numeric
from pbar_omega.exceptions import DomainViolation, NotUnimodular
from pbar_omega.modular import (
    GroupClass,
    GroupElement,
    MultiplierValue,
    S,
    T,
    automorphy_factor,
    chi_multiplier,
    complete_row,
    gcdex,
    group_membership,
    hhat_multiplier,
    in_gamma0_4,
    jacobi_symbol,
    laplacian_fd,
    lowering_fd,
    phat_multiplier,
    psi_multiplier,
    random_gamma_elements,
    random_sl2z_elements,
    weight_transform_residual,
    xi_fd,
)
from pbar_omega.numeric import make_context


@pytest.fixture
def ctx():
    return make_context(128)


class TestGroupElement:
    def test_parse(self) -> None:
        assert GroupElement.parse("7, 5, 4, 3") == GroupElement(7, 5, 4, 3)
        assert str(GroupElement(7, 5, 4, 3)) == "7,5,4,3"

    @pytest.mark.parametrize("text", ["1,1,1,1", "1,2,3", "a,b,c,d"])
    def test_parse_invalid(self, text: str) -> None:
        with pytest.raises(NotUnimodular):
            GroupElement.parse(text)

    def test_product(self) -> None:
        assert S * S == -GroupElement.identity()
        assert (S * T) * (S * T) * (S * T) == -GroupElement.identity()

    def test_action(self, ctx) -> None:
        tau = ctx.mpc(0, 2)
        assert S.act(tau) == ctx.mpc(0, 0.5)
        assert T.act(tau) == ctx.mpc(1, 2)
        assert GroupElement(7, 5, 4, 3).automorphy(tau) == ctx.mpc(3, 8)


class TestGroupMembership:
    @pytest.mark.parametrize(
        "element,expected",
        [
            (GroupElement.identity(), GroupClass.GAMMA),
            (GroupElement(7, 5, 4, 3), GroupClass.GAMMA),
            (GroupElement(1, 0, 8, 1), GroupClass.GAMMA),
            (GroupElement(5, -2, 8, -3), GroupClass.GAMMA),
            (T, GroupClass.GAMMA0_4),
            (GroupElement(1, 0, 4, 1), GroupClass.GAMMA0_4),
            (S, GroupClass.SL2Z),
            (GroupElement(1, 0, 2, 1), GroupClass.SL2Z),
        ],
    )
    def test_membership(self, element: GroupElement, expected: GroupClass) -> None:
        assert group_membership(element) is expected

    def test_in_gamma0_4(self) -> None:
        assert in_gamma0_4(T)
        assert not in_gamma0_4(S)

    def test_random_gamma_elements(self) -> None:
        elements = list(random_gamma_elements(random.Random(3), 25))
        assert len(elements) == 25
        assert all(group_membership(element) is GroupClass.GAMMA for element in elements)

    def test_random_sl2z_elements(self) -> None:
        elements = list(random_sl2z_elements(random.Random(3), 10))
        assert all(e.a * e.d - e.b * e.c == 1 for e in elements)


class TestArithmetic:
    @pytest.mark.parametrize("a,b", [(240, 46), (-7, 3), (5, 0), (0, 9)])
    def test_gcdex(self, a: int, b: int) -> None:
        x, y, g = gcdex(a, b)
        assert a * x + b * y == g
        assert g >= 0

    def test_complete_row(self) -> None:
        element = complete_row(4, 3)
        assert (element.c, element.d) == (4, 3)

    def test_complete_row_not_primitive(self) -> None:
        with pytest.raises(NotUnimodular):
            complete_row(2, 4)

    @pytest.mark.parametrize("a,n,expected", [(2, 7, 1), (3, 7, -1), (2, 15, 1), (5, 15, 0), (0, 1, 1)])
    def test_jacobi_symbol(self, a: int, n: int, expected: int) -> None:
        assert jacobi_symbol(a, n) == expected

    def test_jacobi_symbol_even_modulus(self) -> None:
        with pytest.raises(DomainViolation):
            jacobi_symbol(3, 8)


class TestMultipliers:
    def test_multiplier_value_is_reduced(self) -> None:
        assert MultiplierValue(Fraction(5, 4)) == MultiplierValue(Fraction(1, 4))
        assert MultiplierValue(Fraction(1, 4)) ** 4 == MultiplierValue(0)

    def test_multiplier_value(self, ctx) -> None:
        assert abs(MultiplierValue(Fraction(1, 4)).value(ctx) - ctx.j) < ctx.mpf("1e-35")

    def test_psi_on_generators(self) -> None:
        assert psi_multiplier(T) == MultiplierValue(Fraction(1, 24))
        assert psi_multiplier(S) == MultiplierValue(Fraction(-1, 8))

    @pytest.mark.parametrize("text", ["0,-1,1,0", "1,1,0,1", "7,5,4,3", "2,1,7,4", "1,0,4,1", "-3,1,-7,2"])
    def test_eta_transformation(self, ctx, text: str) -> None:
        element, tau = GroupElement.parse(text), ctx.mpc("0.11", "0.93")
        residual = weight_transform_residual(eta_numeric, Fraction(1, 2), psi_multiplier, element, tau, ctx)
        assert residual < ctx.mpf("1e-30")

    def test_wrong_multiplier_fails(self, ctx) -> None:
        residual = weight_transform_residual(
            eta_numeric, Fraction(1, 2), lambda m: MultiplierValue(0), S, ctx.mpc("0.11", "0.93"), ctx
        )
        assert residual > ctx.mpf("0.1")

    def test_chi_needs_four_dividing_c(self) -> None:
        with pytest.raises(DomainViolation):
            chi_multiplier(1, S)

    def test_chi2_needs_gamma(self) -> None:
        with pytest.raises(DomainViolation):
            chi_multiplier(2, T)

    def test_unknown_chi(self) -> None:
        with pytest.raises(DomainViolation):
            chi_multiplier(5, GroupElement.identity())

    def test_chi_trivial_at_identity(self) -> None:
        for k in (1, 2, 3, 4):
            assert chi_multiplier(k, GroupElement.identity()) == MultiplierValue(0)

    def test_phat(self) -> None:
        assert phat_multiplier(GroupElement(1, 0, 8, 1)) == MultiplierValue(Fraction(1, 2))
        with pytest.raises(DomainViolation):
            phat_multiplier(T)

    def test_hhat_needs_four_dividing_c(self) -> None:
        with pytest.raises(DomainViolation):
            hhat_multiplier(S)


class TestAutomorphyFactor:
    def test_half_integral_principal_branch(self, ctx) -> None:
        factor = automorphy_factor(S, ctx.mpc(0, 1), Fraction(1, 2), ctx)
        assert abs(factor - ctx.expjpi(ctx.mpf(1) / 4)) < ctx.mpf("1e-35")

    def test_integral(self, ctx) -> None:
        assert automorphy_factor(S, ctx.mpc(0, 1), 2, ctx) == -1

    def test_other_weights(self, ctx) -> None:
        with pytest.raises(DomainViolation):
            automorphy_factor(S, ctx.mpc(0, 1), Fraction(1, 3), ctx)


class TestDifferentialOperators:
    def test_lowering_of_conjugate(self, ctx) -> None:
        estimate = lowering_fd(ctx.conj, ctx.mpc(0, 1), ctx)
        assert abs(estimate.value + 2 * ctx.j) < ctx.mpf("1e-15")

    def test_xi_of_conjugate(self, ctx) -> None:
        tau = ctx.mpc("0.3", 2)
        estimate = xi_fd(ctx.conj, Fraction(1, 2), tau, ctx)
        assert abs(estimate.value - 2 * ctx.j * ctx.sqrt(2)) < ctx.mpf("1e-15")

    def test_xi_of_holomorphic(self, ctx) -> None:
        estimate = xi_fd(ctx.exp, 2, ctx.mpc("0.3", 1), ctx)
        assert abs(estimate.value) < ctx.mpf("1e-10")

    def test_laplacian_of_holomorphic(self, ctx) -> None:
        estimate = laplacian_fd(ctx.exp, 2, ctx.mpc("0.3", 1), ctx)
        assert abs(estimate.value) < ctx.mpf("1e-8")

    def test_laplacian_of_v_power(self, ctx) -> None:
        # Delta_0 v^s = s(1 - s) v^s
        tau = ctx.mpc("0.3", "1.5")
        estimate = laplacian_fd(lambda t: t.imag**3, 0, tau, ctx)
        assert abs(estimate.value - (-6) * tau.imag**3) < ctx.mpf("1e-6")

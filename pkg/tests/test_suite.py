import json
from fractions import Fraction
from unittest.mock import Mock, patch

import pytest
from mpmath.libmp import NoConvergence

from pbar_omega.classical import TorsionPoint
from pbar_omega.combinatorics import Family
from pbar_omega.exceptions import DomainViolation, UnknownObject
from pbar_omega.models import Finding, RunParams, SeriesFormat, Status, VerificationReport
from pbar_omega.registry import Identity
from pbar_omega.suite import (
    exit_code,
    expand,
    expansion,
    oracle,
    parse_torsion,
    resolve_params,
    run_identity,
    run_suite,
)


def _report(identity_id: str, status: Status = Status.PASS) -> VerificationReport:
    return VerificationReport(id=identity_id, status=status)


def _passing(context) -> list[Finding]:
    return [Finding(label="x", residual=0, tolerance=0.5)]


class TestResolveParams:
    @patch("pbar_omega.suite.settings")
    def test_exact_identity(self, mock_settings: Mock) -> None:
        mock_settings.DEFAULT_ORDER = 40
        item = Identity("x", "summary", _passing, order=25)
        assert resolve_params(item) == RunParams(order=25)
        assert resolve_params(item, RunParams(order=7, precision=300)) == RunParams(order=7)

    @patch("pbar_omega.suite.settings")
    def test_settings_fill_the_gaps(self, mock_settings: Mock) -> None:
        mock_settings.DEFAULT_ORDER = 40
        mock_settings.PRECISION = 192
        mock_settings.TAU_POINTS = ["0.11,0.93"]
        item = Identity("x", "summary", _passing, numeric=True)
        assert resolve_params(item) == RunParams(order=40, precision=192, tau_points=["0.11,0.93"])

    @patch("pbar_omega.suite.settings")
    def test_overrides_win(self, mock_settings: Mock) -> None:
        mock_settings.DEFAULT_ORDER = 40
        mock_settings.PRECISION = 192
        mock_settings.TAU_POINTS = ["0.11,0.93"]
        item = Identity(
            "x",
            "summary",
            _passing,
            order=10,
            precision=256,
            tau_points=("0.2,1",),
            matrices=("0,-1,1,0",),
            numeric=True,
        )
        assert resolve_params(item) == RunParams(
            order=10, precision=256, tau_points=["0.2,1"], matrices=["0,-1,1,0"]
        )
        overrides = RunParams(
            order=0, precision=64, tau_points=["0.3,2"], matrices=["1,1,0,1"], tolerance=1e-9
        )
        assert resolve_params(item, overrides) == overrides


class TestRunIdentity:
    @patch("pbar_omega.suite.get_identity")
    def test_pass(self, mock_get_identity: Mock) -> None:
        mock_get_identity.return_value = Identity("x", "summary", _passing, order=3)
        report = run_identity("x")
        assert report.status is Status.PASS
        assert report.params.order == 3

    @patch("pbar_omega.suite.get_identity")
    def test_error_becomes_report(self, mock_get_identity: Mock) -> None:
        def failing(context) -> list[Finding]:
            raise DomainViolation("tau must be in the upper half-plane")

        mock_get_identity.return_value = Identity("x", "summary", failing, order=3)
        report = run_identity("x")
        assert report.status is Status.ERROR
        assert report.message == "DomainViolation: tau must be in the upper half-plane"

    @patch("pbar_omega.suite.get_identity")
    def test_mpmath_convergence_error_becomes_report(self, mock_get_identity: Mock) -> None:
        def failing(context) -> list[Finding]:
            raise NoConvergence("series did not converge")

        mock_get_identity.return_value = Identity("x", "summary", failing, order=3)
        report = run_identity("x")
        assert report.status is Status.ERROR
        assert report.message == "NoConvergence: series did not converge"


class TestRunSuite:
    @patch("pbar_omega.suite.run_identity")
    def test_registry_order(self, mock_run_identity: Mock) -> None:
        mock_run_identity.side_effect = lambda identity_id, overrides: _report(identity_id)
        reports = run_suite("spt*", jobs=3)
        ids = ["spt-andrews", "spt-omega", "sptbar-omega", "sptG2-equiv"]
        assert [report.id for report in reports] == ids
        assert mock_run_identity.call_count == 4

    @patch("pbar_omega.suite.get_identity")
    def test_failing_check_does_not_stop_the_suite(self, mock_get_identity: Mock) -> None:
        def failing(context) -> list[Finding]:
            raise NoConvergence("series did not converge")

        mock_get_identity.side_effect = lambda identity_id: Identity(
            identity_id, "summary", failing if identity_id == "spt-omega" else _passing, order=3
        )
        reports = run_suite("spt*", jobs=2)
        assert [report.status for report in reports] == [
            Status.PASS,
            Status.ERROR,
            Status.PASS,
            Status.PASS,
        ]

    @patch("pbar_omega.suite.run_identity")
    def test_tolerance_override(self, mock_run_identity: Mock) -> None:
        mock_run_identity.side_effect = lambda identity_id, overrides: _report(identity_id)
        run_suite("heine", jobs=1, tolerance=1e-3)
        mock_run_identity.assert_called_once_with("heine", RunParams(tolerance=1e-3))


class TestExitCode:
    def test_all_pass(self) -> None:
        assert exit_code([_report("a"), _report("b")]) == 0

    @pytest.mark.parametrize("status", [Status.FAIL, Status.ERROR])
    def test_any_failure(self, status: Status) -> None:
        assert exit_code([_report("a"), _report("b", status)]) == 1


class TestParseTorsion:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("tau/2+1/4", TorsionPoint(Fraction(1, 2), Fraction(1, 4))),
            ("1/4", TorsionPoint(0, Fraction(1, 4))),
            ("tau + 1/2", TorsionPoint(1, Fraction(1, 2))),
            ("-tau", TorsionPoint(-1, 0)),
            ("1/4*tau-1/8", TorsionPoint(Fraction(1, 4), Fraction(-1, 8))),
        ],
    )
    def test_parse(self, text: str, expected: TorsionPoint) -> None:
        assert parse_torsion(text) == expected

    @pytest.mark.parametrize("text", ["", "z+1", "tau^2"])
    def test_parse_invalid(self, text: str) -> None:
        with pytest.raises(UnknownObject):
            parse_torsion(text)


class TestExpand:
    def test_eta_json(self) -> None:
        assert json.loads(expand("eta", 2)) == {
            "schema_version": 1,
            "object": "eta",
            "order": 2,
            "terms": [["1/24", "1"], ["25/24", "-1"]],
        }

    def test_eta_csv(self) -> None:
        assert expand("eta", 2, SeriesFormat.CSV) == "exponent,coefficient\n1/24,1\n25/24,-1\n"

    def test_eta_power(self) -> None:
        assert expansion("eta^3", 4).terms == [("1/8", "1"), ("9/8", "-3"), ("25/8", "5")]

    def test_eta_quotient_matches_power(self) -> None:
        assert expansion("eta(1)^3", 6).terms == expansion("eta^3", 6).terms

    def test_family(self) -> None:
        assert expansion("spt", 5).terms == [("1", "1"), ("2", "3"), ("3", "5"), ("4", "10")]

    def test_empty_below_first_power(self) -> None:
        assert expansion("pbar-omega", 0).terms == []

    def test_theta(self) -> None:
        assert expansion("theta(1/2,1/4)", 3).terms

    @pytest.mark.parametrize("name", ["zeta", "eta(1)^3 * zeta(2)", "theta(1/3,1/4)"])
    def test_unknown(self, name: str) -> None:
        with pytest.raises(UnknownObject):
            expand(name, 5)


class TestOracle:
    def test_spt(self) -> None:
        assert oracle(Family.SPT, 3) == [(1, 1), (2, 3), (3, 5)]

    def test_no_oracle(self) -> None:
        with pytest.raises(UnknownObject):
            oracle(Family.SPT_G2, 3)

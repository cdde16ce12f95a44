from unittest.mock import ANY, Mock, call, patch

from pbar_omega.display import (
    ProcessUserFeedback,
    print_identities,
    print_reports,
    print_settings,
)
from pbar_omega.models import Status, VerificationReport
from pbar_omega.registry import Identity


class TestProcessUserFeedback:
    @patch("pbar_omega.display.Progress")
    def test_tasks(self, mock_progress: Mock) -> None:
        feedback = ProcessUserFeedback()
        mock_progress.return_value.add_task.assert_called_once_with(
            ProcessUserFeedback.RUNNING_CHECKS, total=1, visible=False
        )

        task = mock_progress.return_value.add_task.return_value
        feedback.set_total(ProcessUserFeedback.RUNNING_CHECKS, 5)
        feedback.set_visible(ProcessUserFeedback.RUNNING_CHECKS)
        feedback.set_advance(ProcessUserFeedback.RUNNING_CHECKS)
        mock_progress.return_value.update.assert_has_calls([call(task, total=5), call(task, visible=True)])
        mock_progress.return_value.advance.assert_called_once_with(task)


class TestPrintReports:
    @patch("pbar_omega.display.Table")
    @patch("pbar_omega.display.Console")
    def test_rows(self, mock_console: Mock, mock_table: Mock) -> None:
        reports = [
            VerificationReport(id="heine", status=Status.PASS, residual="0.000000e+00", elapsed_ms=3),
            VerificationReport(id="mu-laws", status=Status.ERROR, elapsed_ms=12),
        ]
        print_reports(reports)
        mock_console.assert_called_once_with(stderr=True)
        mock_table.return_value.add_row.assert_has_calls(
            [
                call("heine", "[green]pass[/green]", "0.000000e+00", "3"),
                call("mu-laws", "[yellow]error[/yellow]", "-", "12"),
            ]
        )
        mock_console.return_value.print.assert_called_once_with(mock_table.return_value)

    def test_given_console(self) -> None:
        console = Mock()
        print_reports([], console)
        console.print.assert_called_once_with(ANY)


class TestPrintSettings:
    @patch("pbar_omega.display.Table")
    @patch("pbar_omega.display.Console")
    def test_rows(self, mock_console: Mock, mock_table: Mock) -> None:
        print_settings({"PRECISION": 192, "TAU_POINTS": ["0.11,0.93"]})
        mock_table.return_value.add_row.assert_has_calls(
            [call("PRECISION", "192"), call("TAU_POINTS", "['0.11,0.93']")]
        )
        mock_console.return_value.print.assert_called_once()


class TestPrintIdentities:
    @patch("pbar_omega.display.Table")
    @patch("pbar_omega.display.Console")
    def test_kinds(self, mock_console: Mock, mock_table: Mock) -> None:
        items = [
            Identity("heine", "Heine's transformation", Mock()),
            Identity("mu-laws", "laws of mu", Mock(), numeric=True),
            Identity("hhat-modular", "weight 3/2", Mock(), numeric=True, slow=True),
        ]
        print_identities(items)
        mock_table.return_value.add_row.assert_has_calls(
            [
                call("heine", "exact", "Heine's transformation"),
                call("mu-laws", "numeric", "laws of mu"),
                call("hhat-modular", "numeric (slow)", "weight 3/2"),
            ]
        )
        mock_console.return_value.print.assert_called_once()

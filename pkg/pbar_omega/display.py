from typing import Any, Iterable

from rich.console import Console
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TaskID,
    TaskProgressColumn,
    TextColumn,
)
from rich.table import Table

from pbar_omega.models import Status, VerificationReport
from pbar_omega.registry import Identity

STATUS_STYLES = {Status.PASS: "green", Status.FAIL: "red", Status.ERROR: "yellow"}


class ProcessUserFeedback:
    RUNNING_CHECKS = "Running checks"
    progress: Progress
    _tasks: dict[str, TaskID]

    def __init__(self):
        self.progress = Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TaskProgressColumn(),
            MofNCompleteColumn(),
            console=Console(stderr=True),
        )

        self._tasks = dict()
        self._add_tasks()

    def _get_task(self, task_name: str) -> TaskID:
        return self._tasks[task_name]

    def set_completed(self, task_name: str) -> None:
        self.progress.update(self._get_task(task_name), completed=True)

    def set_total(self, task_name: str, new_total: float) -> None:
        self.progress.update(self._get_task(task_name), total=new_total)

    def set_advance(self, task_name: str) -> None:
        self.progress.advance(self._get_task(task_name))

    def set_visible(self, task_name: str) -> None:
        self.progress.update(self._get_task(task_name), visible=True)

    def _add_tasks(self) -> None:
        self._tasks[self.RUNNING_CHECKS] = self.progress.add_task(self.RUNNING_CHECKS, total=1, visible=False)


process_user_feedback = ProcessUserFeedback()


def print_reports(reports: Iterable[VerificationReport], console: Console = None) -> None:
    console = console or Console(stderr=True)

    table = Table(title="Verification reports")
    table.add_column("id", no_wrap=True)
    table.add_column("status")
    table.add_column("residual", justify="right")
    table.add_column("ms", justify="right")

    for report in reports:
        style = STATUS_STYLES[report.status]
        table.add_row(
            report.id,
            f"[{style}]{report.status.value}[/{style}]",
            report.residual or "-",
            str(report.elapsed_ms),
        )

    console.print(table)


def print_settings(values: dict[str, Any], console: Console = None) -> None:
    console = console or Console()

    table = Table(title="Settings")
    table.add_column("key")
    table.add_column("value")
    for key, value in values.items():
        table.add_row(key, str(value))

    console.print(table)


def print_identities(items: Iterable[Identity], console: Console = None) -> None:
    console = console or Console()

    table = Table(title="Registered identities")
    table.add_column("id", no_wrap=True)
    table.add_column("kind")
    table.add_column("statement")
    for item in items:
        kind = "numeric" if item.numeric else "exact"
        table.add_row(item.id, f"{kind} (slow)" if item.slow else kind, item.summary)

    console.print(table)

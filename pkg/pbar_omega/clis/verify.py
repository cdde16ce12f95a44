import logging
from typing import Optional

import click

from pbar_omega.display import print_identities, print_reports, process_user_feedback
from pbar_omega.exceptions import DomainViolation, NotUnimodular, UnknownIdentity
from pbar_omega.models import RunParams, VerificationReport
from pbar_omega.modular import GroupElement
from pbar_omega.numeric import UHPoint
from pbar_omega.registry import identities
from pbar_omega.suite import exit_code, run_identity, run_suite


@click.group()
def verify_cli() -> None:
    ...


def _set_debug(debug: bool) -> None:
    if debug:
        logger = logging.getLogger("pbar_omega")
        logger.setLevel(logging.DEBUG)


def _write_reports(reports: list[VerificationReport], output: Optional[str]) -> None:
    lines = "".join(f"{report.json()}\n" for report in reports)
    if output:
        with open(output, "w") as file:
            file.write(lines)
    else:
        click.echo(lines, nl=False)


debug_option = click.option(
    "-d", "--debug", is_flag=True, show_default=True, default=False, help="Debug :: log checks and windows."
)
output_option = click.option("-o", "--output", default=None, help="write JSON-lines reports to this file")
tolerance_option = click.option("--tolerance", default=None, type=float, help="override every tolerance")


@verify_cli.command(name="list")
def list_command() -> None:
    """List the registered identities."""
    print_identities(identities())


@verify_cli.command(name="run")
@click.option("-N", "--order", default=None, type=click.IntRange(min=0), help="truncation order")
@click.option(
    "-P", "--prec", "precision", default=None, type=click.IntRange(min=53), help="precision in bits"
)
@click.option("-t", "--tau", "tau_points", multiple=True, help="evaluation point u,v (repeatable)")
@click.option("-m", "--matrix", "matrices", multiple=True, help="group element a,b,c,d (repeatable)")
@tolerance_option
@output_option
@debug_option
@click.argument("identity_id")
@click.pass_context
def run_command(
    ctx: click.Context,
    identity_id: str,
    order: Optional[int],
    precision: Optional[int],
    tau_points: tuple[str, ...],
    matrices: tuple[str, ...],
    tolerance: Optional[float],
    output: Optional[str],
    debug: bool,
) -> None:
    """Run one identity check."""
    _set_debug(debug)
    try:
        for text in tau_points:
            UHPoint.parse(text)
        for text in matrices:
            GroupElement.parse(text)
        params = RunParams(
            order=order,
            precision=precision,
            tau_points=list(tau_points),
            matrices=list(matrices),
            tolerance=tolerance,
        )
        report = run_identity(identity_id, params)
    except (UnknownIdentity, DomainViolation, NotUnimodular) as error:
        click.secho(str(error), fg="red", err=True)
        ctx.exit(2)

    _write_reports([report], output)
    print_reports([report])
    ctx.exit(exit_code([report]))


@verify_cli.command(name="suite")
@click.option("-f", "--filter", "pattern", default=None, help="glob over identity ids")
@click.option("-j", "--jobs", default=None, type=click.IntRange(min=1), help="number of parallel checks")
@output_option
@tolerance_option
@debug_option
@click.pass_context
def suite_command(
    ctx: click.Context,
    pattern: Optional[str],
    jobs: Optional[int],
    output: Optional[str],
    tolerance: Optional[float],
    debug: bool,
) -> None:
    """Run every registered identity, or those matching --filter."""
    _set_debug(debug)

    with process_user_feedback.progress:
        reports = run_suite(pattern, jobs, tolerance)

    _write_reports(reports, output)
    print_reports(reports)
    ctx.exit(exit_code(reports))

import logging

import click

from pbar_omega.combinatorics import Family
from pbar_omega.exceptions import PbarOmegaError, UnknownObject
from pbar_omega.models import SeriesFormat
from pbar_omega.suite import ORACLE_FAMILIES, expand, oracle


@click.group()
def series_cli() -> None:
    ...


@series_cli.command(name="expand")
@click.option("-N", "--order", required=True, type=click.IntRange(min=0), help="truncation order")
@click.option(
    "--format",
    "output_format",
    type=click.Choice([item.value for item in SeriesFormat], case_sensitive=False),
    default=SeriesFormat.JSON.value,
    show_default=True,
)
@click.option(
    "-d", "--debug", is_flag=True, show_default=True, default=False, help="Debug :: log expansions."
)
@click.argument("name")
@click.pass_context
def expand_command(ctx: click.Context, name: str, order: int, output_format: str, debug: bool) -> None:
    """Expand a named series to O(q^N).

    NAME is a partition family (pbar-omega, spt, ...), omega, eta, eta^K, an eta quotient
    such as "eta(1)^3 * eta(4) / eta(2)^2", theta(a,b) or mu(z1,z2) with z = a*tau+b.
    """
    if debug:
        logging.getLogger("pbar_omega").setLevel(logging.DEBUG)
    try:
        text = expand(name, order, SeriesFormat(output_format.lower()))
    except UnknownObject as error:
        click.secho(str(error), fg="red", err=True)
        ctx.exit(2)
    except PbarOmegaError as error:
        click.secho(f"{type(error).__name__}: {error}", fg="red", err=True)
        ctx.exit(1)

    click.echo(text.rstrip("\n"))


@series_cli.command(name="oracle")
@click.option("--n", "n", required=True, type=click.IntRange(min=1), help="largest n to enumerate")
@click.argument("family")
@click.pass_context
def oracle_command(ctx: click.Context, family: str, n: int) -> None:
    """Enumerate FAMILY(k) for k = 1..N by brute force, as CSV rows n,count."""
    try:
        rows = oracle(Family.parse(family), n)
    except (ValueError, UnknownObject) as error:
        choices = ", ".join(item.value for item in ORACLE_FAMILIES)
        click.secho(f"{error} (families: {choices})", fg="red", err=True)
        ctx.exit(2)
    except PbarOmegaError as error:
        click.secho(f"{type(error).__name__}: {error}", fg="red", err=True)
        ctx.exit(2)

    click.echo("n,count")
    for k, count in rows:
        click.echo(f"{k},{count}")

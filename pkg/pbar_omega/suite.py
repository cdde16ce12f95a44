import concurrent.futures
import csv
import io
import logging
import re
import time
from concurrent.futures import Future
from fractions import Fraction
from typing import Final, Optional

from mpmath.libmp import NoConvergence

from .appell import mu_torsion_series
from .classical import EtaQuotient, TorsionPoint, theta_series_at_torsion
from .combinatorics import Family, census_table, genfun, omega_series
from .config import settings
from .display import process_user_feedback
from .exactalg import Cyc8, QSeries
from .exceptions import PbarOmegaError, UnknownObject
from .models import RunParams, SeriesExpansion, SeriesFormat, Status, VerificationReport
from .registry import CheckContext, Identity, get_identity, identities

logger = logging.getLogger(__name__)

ORACLE_FAMILIES: Final[tuple[Family, ...]] = (
    Family.SPT,
    Family.P_OMEGA,
    Family.SPT_OMEGA,
    Family.PBAR_OMEGA,
    Family.SPTBAR_OMEGA,
)

CHECK_ERRORS: Final[tuple[type[Exception], ...]] = (
    PbarOmegaError,
    ArithmeticError,
    ValueError,
    TypeError,
    NoConvergence,
)

_ETA_POWER = re.compile(r"^eta(?:\^\{?(-?\d+)\}?)?$")
_THETA = re.compile(r"^theta\((.+),(.+)\)$")
_MU = re.compile(r"^mu\((.+),(.+)\)$")
_TORSION = re.compile(
    r"^(?:(?P<sign>[+-]?)(?P<coef>\d+(?:/\d+)?)?\*?tau(?:/(?P<den>\d+))?)?(?P<shift>[+-]?\d+(?:/\d+)?)?$"
)


def _first(*values):
    return next(value for value in values if value is not None)


def resolve_params(identity: Identity, overrides: Optional[RunParams] = None) -> RunParams:
    """Overrides win over the identity defaults, which win over the settings."""
    overrides = overrides or RunParams()
    order = _first(overrides.order, identity.order, settings.DEFAULT_ORDER)
    if not identity.numeric:
        return RunParams(order=order, tolerance=overrides.tolerance)
    return RunParams(
        order=order,
        precision=_first(overrides.precision, identity.precision, settings.PRECISION),
        tau_points=list(overrides.tau_points or identity.tau_points or settings.TAU_POINTS),
        matrices=list(overrides.matrices or identity.matrices),
        tolerance=overrides.tolerance,
    )


def _check_context(identity: Identity, params: RunParams) -> CheckContext:
    return CheckContext(
        params=params,
        tolerance=identity.tolerance,
        guard_bits=settings.GUARD_BITS,
        nodes=settings.CONTOUR_NODES,
        cap=settings.ENUMERATION_CAP,
        fd_step=settings.FD_STEP,
        fd_step_laplacian=settings.FD_STEP_LAPLACIAN,
    )


def _log(message: str, *args) -> None:
    if logger.isEnabledFor(logging.DEBUG):
        process_user_feedback.progress.log(message % args)


def run_identity(identity_id: str, overrides: Optional[RunParams] = None) -> VerificationReport:
    """Run one registered check; computational errors become error reports."""
    identity = get_identity(identity_id)
    params = resolve_params(identity, overrides)
    _log("%s: started with %s", identity_id, params)
    start = time.perf_counter()
    try:
        findings = identity.check(_check_context(identity, params))
    except CHECK_ERRORS as error:
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        report = VerificationReport.from_error(identity_id, params, error, elapsed_ms)
    else:
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        report = VerificationReport.from_findings(identity_id, params, findings, elapsed_ms)
    _log("%s: %s in %d ms", identity_id, report.status.value, report.elapsed_ms)
    return report


def run_suite(
    pattern: Optional[str] = None, jobs: Optional[int] = None, tolerance: Optional[float] = None
) -> list[VerificationReport]:
    """Run every identity matching the glob pattern; reports come back in registry order."""
    selected = identities(pattern)
    overrides = RunParams(tolerance=tolerance)
    process_user_feedback.set_total(process_user_feedback.RUNNING_CHECKS, len(selected))
    process_user_feedback.set_visible(process_user_feedback.RUNNING_CHECKS)

    reports: dict[str, VerificationReport] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs or settings.MAX_WORKERS) as executor:
        futures: dict[Future[VerificationReport], str] = {
            executor.submit(run_identity, item.id, overrides): item.id for item in selected
        }
        for future in concurrent.futures.as_completed(futures):
            reports[futures[future]] = future.result()
            process_user_feedback.set_advance(process_user_feedback.RUNNING_CHECKS)

    return [reports[item.id] for item in selected]


def exit_code(reports: list[VerificationReport]) -> int:
    return 0 if all(report.status is Status.PASS for report in reports) else 1


def parse_torsion(text: str) -> TorsionPoint:
    """'a*tau+b', 'tau/k+b', 'tau', or a rational b."""
    compact = text.replace(" ", "")
    match = _TORSION.match(compact)
    if not compact or not match:
        raise UnknownObject(f"cannot read {text!r} as a torsion point a*tau+b")
    a = Fraction(0)
    if "tau" in compact:
        a = Fraction(match.group("coef") or 1) / int(match.group("den") or 1)
        if match.group("sign") == "-":
            a = -a
    return TorsionPoint(a, Fraction(match.group("shift") or 0))


def _named_series(name: str, order: int) -> QSeries:
    text = name.strip()
    try:
        family = Family.parse(text)
    except ValueError:
        family = None
    if family is not None:
        return genfun(family, order)
    if text == "omega":
        return omega_series(order)
    if match := _ETA_POWER.match(text):
        return EtaQuotient(((1, int(match.group(1) or 1)),)).series(order)
    if match := _THETA.match(text):
        try:
            point = TorsionPoint(Fraction(match.group(1).strip()), Fraction(match.group(2).strip()))
        except ValueError as error:
            raise UnknownObject(f"cannot expand {name!r}: {error}") from error
        return theta_series_at_torsion(point, order)
    if match := _MU.match(text):
        return mu_torsion_series(parse_torsion(match.group(1)), parse_torsion(match.group(2)), order)
    if "eta(" in text:
        try:
            return EtaQuotient.parse(text).series(order)
        except ValueError as error:
            raise UnknownObject(f"cannot expand {name!r}: {error}") from error
    raise UnknownObject(f"no series named {name!r}")


def _coefficient_text(value: Cyc8) -> str:
    return str(value.c0) if value.is_rational else str(value)


def expansion(name: str, order: int) -> SeriesExpansion:
    series = _named_series(name, order)
    terms = [(str(exponent), _coefficient_text(value)) for exponent, value in series.items()]
    return SeriesExpansion(object=name, order=order, terms=terms)


def expand(name: str, order: int, output_format: SeriesFormat = SeriesFormat.JSON) -> str:
    """The named series to O(q^order), serialized as one JSON object or as CSV rows exponent,coefficient."""
    result = expansion(name, order)
    if output_format is SeriesFormat.JSON:
        return result.json()
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["exponent", "coefficient"])
    writer.writerows(result.terms)
    return buffer.getvalue()


def oracle(family: Family, n: int) -> list[tuple[int, int]]:
    if family not in ORACLE_FAMILIES:
        raise UnknownObject(f"{family.value} has no enumeration oracle")
    return census_table(family, n, settings.ENUMERATION_CAP)

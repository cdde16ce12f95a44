from enum import Enum
from typing import Final, Optional

from pydantic import BaseModel, Field

SCHEMA_VERSION: Final[int] = 1
EXACT_TOLERANCE: Final[float] = 0.5


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"


class RunParams(BaseModel):
    order: Optional[int] = None
    precision: Optional[int] = None
    tau_points: list[str] = list()
    matrices: list[str] = list()
    tolerance: Optional[float] = None

    class Config:
        frozen = True


class Witness(BaseModel):
    exponent: Optional[str] = None
    expected: Optional[str] = None
    actual: Optional[str] = None
    message: Optional[str] = None


class Finding(BaseModel):
    """One measured quantity of a check: passes when residual < tolerance.

    Advisory findings are reported in the message but never fail the check.
    """

    label: str
    residual: float
    tolerance: float
    witness: Optional[Witness] = None
    advisory: bool = False

    @property
    def passed(self) -> bool:
        return self.advisory or self.residual < self.tolerance

    @property
    def ratio(self) -> float:
        if self.tolerance > 0:
            return self.residual / self.tolerance
        return float("inf") if self.residual > 0 else 0.0

    def with_tolerance(self, tolerance: float) -> "Finding":
        return self.copy(update={"tolerance": tolerance})


def mismatch_finding(label: str, mismatch: Optional[tuple], tolerance: float = EXACT_TOLERANCE) -> Finding:
    """Exact comparison: residual is the number of mismatching coefficients found (0 or 1)."""
    if mismatch is None:
        return Finding(label=label, residual=0, tolerance=tolerance)
    *exponents, expected, actual = mismatch
    witness = Witness(
        exponent=", ".join(str(e) for e in exponents),
        expected=str(expected),
        actual=str(actual),
        message=f"{label}: first mismatching coefficient",
    )
    return Finding(label=label, residual=1, tolerance=tolerance, witness=witness)


def format_residual(residual: float) -> str:
    return f"{residual:.6e}"


class VerificationReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    id: str
    params: RunParams = RunParams()
    status: Status
    residual: Optional[str] = None
    witness: Optional[Witness] = None
    message: str = ""
    elapsed_ms: int = Field(default=0, ge=0)

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS

    @classmethod
    def from_findings(
        cls, identity: str, params: RunParams, findings: list[Finding], elapsed_ms: int = 0
    ) -> "VerificationReport":
        if params.tolerance is not None:
            findings = [
                finding if finding.advisory else finding.with_tolerance(params.tolerance)
                for finding in findings
            ]
        failed = [finding for finding in findings if not finding.passed]
        binding = [finding for finding in findings if not finding.advisory]
        worst = max(binding, key=lambda finding: finding.ratio, default=None)
        witness = None
        if failed:
            first = failed[0]
            witness = first.witness or Witness(
                message=f"{first.label}: residual {format_residual(first.residual)} "
                f">= tolerance {format_residual(first.tolerance)}"
            )
        summary = "; ".join(f"{finding.label}: {format_residual(finding.residual)}" for finding in findings)
        return cls(
            id=identity,
            params=params,
            status=Status.FAIL if failed else Status.PASS,
            residual=format_residual(worst.residual) if worst else None,
            witness=witness,
            message=summary,
            elapsed_ms=elapsed_ms,
        )

    @classmethod
    def from_error(
        cls, identity: str, params: RunParams, error: Exception, elapsed_ms: int = 0
    ) -> "VerificationReport":
        return cls(
            id=identity,
            params=params,
            status=Status.ERROR,
            message=f"{type(error).__name__}: {error}",
            elapsed_ms=elapsed_ms,
        )


class SeriesFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class SeriesExpansion(BaseModel):
    """A named series to O(q^order): terms are (exponent, coefficient) pairs in increasing exponent."""

    schema_version: int = SCHEMA_VERSION
    object: str
    order: int
    terms: list[tuple[str, str]] = list()

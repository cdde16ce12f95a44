import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Callable, Final, Iterable, Iterator, Optional

from .exactalg import QSeries, Rational
from .exceptions import DomainViolation, NoCombinatorialDefinition, ResourceBound

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP: Final[int] = 50


class Family(str, Enum):
    SPT = "spt"
    P_OMEGA = "p-omega"
    SPT_OMEGA = "spt-omega"
    PBAR_OMEGA = "pbar-omega"
    SPTBAR_OMEGA = "sptbar-omega"
    SPT_G2 = "spt-G2"

    @classmethod
    def parse(cls, text: str) -> "Family":
        normalized = text.strip().replace("_", "-")
        for family in cls:
            if family.value.lower() == normalized.lower():
                return family
        raise ValueError(f"unknown partition family {text!r}")


class Side(str, Enum):
    DEFINITION = "definition"
    APPELL = "appell"


@dataclass(frozen=True)
class Overpartition:
    """A partition with parts in non-decreasing order.

    The first occurrence of every size in `overlined` carries an overline.
    """

    parts: tuple[int, ...]
    overlined: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if list(self.parts) != sorted(self.parts):
            raise ValueError(f"parts must be non-decreasing, got {self.parts}")
        if not self.overlined <= set(self.parts):
            raise ValueError(f"overlined sizes {sorted(self.overlined)} are not all parts of {self.parts}")

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def smallest(self) -> int:
        return self.parts[0]

    @property
    def smallest_multiplicity(self) -> int:
        return self.parts.count(self.parts[0])

    def __str__(self) -> str:
        shown, seen = [], set()
        for part in self.parts:
            marked = part in self.overlined and part not in seen
            seen.add(part)
            shown.append(f"{part}'" if marked else str(part))
        return "+".join(shown)


def partitions(
    n: int, smallest: int = 1, allowed: Optional[Callable[[int], bool]] = None
) -> Iterator[tuple[int, ...]]:
    """Partitions of n into parts >= smallest, in non-decreasing order, smallest part first."""
    if n == 0:
        yield ()
        return
    for part in range(smallest, n + 1):
        if allowed is not None and not allowed(part):
            continue
        for rest in partitions(n - part, part, allowed):
            yield (part,) + rest


def omega_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Partitions of n whose odd parts are less than twice the smallest part."""
    for smallest in range(1, n + 1):
        rest = partitions(n - smallest, smallest, lambda part, s=smallest: part % 2 == 0 or part < 2 * s)
        for tail in rest:
            yield (smallest,) + tail


def overpartitions(n: int) -> Iterator[Overpartition]:
    for parts in partitions(n):
        sizes = sorted(set(parts))
        for count in range(len(sizes) + 1):
            for chosen in combinations(sizes, count):
                yield Overpartition(parts, frozenset(chosen))


def omega_overpartitions(n: int) -> Iterator[Overpartition]:
    """Overpartitions counted by pbar_omega.

    Odd parts stay below twice the smallest part, which is always overlined.
    """
    for parts in omega_partitions(n):
        others = sorted(set(parts) - {parts[0]})
        for count in range(len(others) + 1):
            for chosen in combinations(others, count):
                yield Overpartition(parts, frozenset(chosen) | {parts[0]})


def census(family: Family, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    if n < 1:
        raise DomainViolation(f"census needs n >= 1, got {n}")
    if family is Family.SPT_G2:
        raise NoCombinatorialDefinition("spt_G2 is only defined through its generating function")
    if n > cap:
        raise ResourceBound(f"n={n} is above the enumeration cap {cap}")
    if family is Family.SPT:
        return sum(parts.count(parts[0]) for parts in partitions(n))
    if family is Family.P_OMEGA:
        return sum(1 for _ in omega_partitions(n))
    if family is Family.SPT_OMEGA:
        return sum(parts.count(parts[0]) for parts in omega_partitions(n))
    if family is Family.PBAR_OMEGA:
        return sum(1 for _ in omega_overpartitions(n))
    return sum(partition.smallest_multiplicity for partition in omega_overpartitions(n))


def census_table(family: Family, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list[tuple[int, int]]:
    return [(k, census(family, k, cap)) for k in range(1, n + 1)]


def census_series(family: Family, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> QSeries:
    """sum_{k <= n} census(family, k) q^k + O(q^(n+1))."""
    return QSeries.from_terms(dict(census_table(family, n, cap)), n + 1)


def _product(order: Fraction, divide: Iterable[int] = (), multiply_plus: Iterable[int] = ()) -> QSeries:
    """prod (1 + q^e) over multiply_plus / prod (1 - q^e) over divide, dropping factors beyond the order."""
    result = QSeries.one(order)
    for exponent in multiply_plus:
        if exponent < order:
            result = result.mul_binomial(-1, exponent)
    for exponent in divide:
        if exponent < order:
            result = result.div_binomial(1, exponent)
    return result


def _up_to(start: int, order: Fraction, step: int = 1) -> range:
    """start, start + step, ... below the order."""
    return range(start, max(start, int(order) + 1), step)


def _smallest_part_sum(order: Fraction, term: Callable[[int, Fraction], Optional[QSeries]]) -> QSeries:
    """sum_{n >= 1} q^n * term(n), where term(n) is built to O(q^(order - n))."""
    total = QSeries.zero(order)
    n = 1
    while n < order:
        factor = term(n, order - n)
        if factor is not None:
            total = total + factor.shift(n)
        n += 1
    return total


def _spt_definition(order: Fraction) -> QSeries:
    return _smallest_part_sum(order, lambda n, rest: _product(rest, [n, n] + list(_up_to(n + 1, rest))))


def _omega_term(n: int, rest: Fraction, smallest_power: int, overlined: bool) -> QSeries:
    middle = range(n + 1, 2 * n + 1)
    evens = _up_to(2 * n + 2, rest, 2)
    divide = [n] * smallest_power + list(middle) + list(evens)
    plus = list(middle) + list(evens) if overlined else []
    return _product(rest, divide, plus)


def _spt_g2_term(n: int, rest: Fraction) -> QSeries:
    middle = list(range(n + 1, 2 * n + 1))
    divide = [n, n] + middle + middle + list(_up_to(2 * n + 2, rest, 2)) + list(_up_to(4 * n + 2, rest, 4))
    return _product(rest, divide)


def divisor_sum_series(order: Rational) -> QSeries:
    """sum_{n >= 1} n q^n / (1 - q^n)."""
    order = Fraction(order)
    coefficients: dict[int, int] = {}
    for n in _up_to(1, order - 1):
        for multiple in range(n, int(order) + 1, n):
            if multiple < order:
                coefficients[multiple] = coefficients.get(multiple, 0) + n
    return QSeries.from_terms(coefficients, order)


def _lerch_sum(
    order: Fraction, exponent: Callable[[int], int], step: int, plus: Callable[[int], int]
) -> QSeries:
    """sum_{n >= 1} (-1)^n q^exponent(n) (1 + q^plus(n)) / (1 - q^(step n))^2.

    plus(n) == 0 drops the numerator factor.
    """
    total = QSeries.zero(order)
    n = 1
    while exponent(n) < order:
        rest = order - exponent(n)
        term = _product(rest, [step * n, step * n], [plus(n)] if plus(n) else [])
        total = total + term.shift(exponent(n)).scale(-1 if n % 2 else 1)
        n += 1
    return total


def omega_series(order: Rational) -> QSeries:
    """omega(q) = sum_{n >= 0} q^(2n(n+1)) / (q; q^2)_(n+1)^2."""
    order = Fraction(order)
    total = QSeries.zero(order)
    n = 0
    while 2 * n * (n + 1) < order:
        rest = order - 2 * n * (n + 1)
        odd = list(range(1, 2 * n + 2, 2))
        total = total + _product(rest, odd + odd).shift(2 * n * (n + 1))
        n += 1
    return total


def _appell_side(family: Family, order: Fraction) -> QSeries:
    if family is Family.SPT:
        lerch = _lerch_sum(order, lambda n: n * (3 * n + 1) // 2, 1, lambda n: n)
        bracket = divisor_sum_series(order) + lerch
        return bracket * _product(order, _up_to(1, order))
    if family is Family.P_OMEGA:
        return omega_series(order - 1).shift(1)
    if family is Family.SPT_OMEGA:
        lerch = _lerch_sum(order, lambda n: n * (3 * n + 1), 2, lambda n: 2 * n)
        bracket = divisor_sum_series(order) + lerch
        return bracket * _product(order, _up_to(2, order, 2))
    if family in (Family.SPTBAR_OMEGA, Family.SPT_G2):
        lerch = _lerch_sum(order, lambda n: 2 * n * (n + 1), 2, lambda n: 0)
        bracket = divisor_sum_series(order) + lerch.scale(2)
        evens = list(_up_to(2, order, 2))
        return bracket * _product(order, evens, evens)
    raise DomainViolation(
        f"the appell side of {family.value} is the indefinite triple sum, see indefinite.family_series"
    )


def genfun(family: Family, order: Rational, side: Side = Side.DEFINITION) -> QSeries:
    """Generating function of a family to O(q^order).

    The definition side expands the q-factorial sum over the smallest part; the appell side
    uses the Lerch-type or mock theta representation of the same series.
    """
    order = Fraction(order)
    if order < 1:
        return QSeries.zero(max(order, Fraction(0)))
    if side is Side.APPELL:
        return _appell_side(family, order)
    if family is Family.SPT:
        return _spt_definition(order)
    if family is Family.P_OMEGA:
        return _smallest_part_sum(order, lambda n, rest: _omega_term(n, rest, 1, False))
    if family is Family.SPT_OMEGA:
        return _smallest_part_sum(order, lambda n, rest: _omega_term(n, rest, 2, False))
    if family is Family.PBAR_OMEGA:
        return _smallest_part_sum(order, lambda n, rest: _omega_term(n, rest, 1, True))
    if family is Family.SPTBAR_OMEGA:
        return _smallest_part_sum(order, lambda n, rest: _omega_term(n, rest, 2, True))
    return _smallest_part_sum(order, _spt_g2_term)


def overpartition_series(order: Rational) -> QSeries:
    """(-q; q)_inf / (q; q)_inf."""
    order = Fraction(order)
    exponents = list(_up_to(1, order))
    return _product(order, exponents, exponents)

"""
Sequences module for Sparse Forge.
Gap bases r_0 > r_1 > ... for the fast regimes and the geometric control family.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Optional, Union

from errors import ConfigError, MagnitudeOverflowError
from exact_sets.scalars import GapCombo
from magnitudes.enclosures import Bounds
from magnitudes.towers import (
    LogAtom, Ordering, TowerMag, TowerSum, engine_for, mag_compare
)

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]

# Terms above this many bits are kept symbolic.
MATERIALIZE_BITS = 1 << 24
# Consecutive ratios wider than this are not folded exactly.
EXACT_RATIO_BITS = 8192
# Certified floor for ratios r_{j-1}/r_j of the tower regime, j >= 2.
TOWER_RATIO_FLOOR = Fraction(1 << 64)
TOWER_TOP = Fraction(16)


class Regime(Enum):
    """Gap-sequence regimes."""
    RATIONAL_FAST = "rational"
    TOWER_FAST = "tower"
    GEOMETRIC = "geometric"

    @classmethod
    def parse(cls, token: Union[str, 'Regime']) -> 'Regime':
        if isinstance(token, Regime):
            return token
        normalized = str(token).strip().lower().replace("_", "-")
        aliases = {
            "rational": cls.RATIONAL_FAST,
            "rational-fast": cls.RATIONAL_FAST,
            "tower": cls.TOWER_FAST,
            "tower-fast": cls.TOWER_FAST,
            "geometric": cls.GEOMETRIC,
            "middle-thirds": cls.GEOMETRIC,
        }
        if normalized not in aliases:
            raise ConfigError(f"Unknown regime: {token!r}")
        return aliases[normalized]


@lru_cache(maxsize=None)
def rational_exponent(k: int) -> int:
    """a_k with r_k = 2^(-4 a_k): a_0 = 0, a_1 = 1, a_{k+1} = (k+2) a_k."""
    if k == 0:
        return 0
    return math.factorial(k + 1) // 2


def tower_depth(k: int) -> int:
    """d_k with r_k = 1/exp_{d_k}(16) for k >= 1."""
    return k * (k + 1) // 2 - 1


class GapBasis(ABC):
    """A strictly decreasing gap sequence r_0 = 1 > r_1 > r_2 > ..."""

    name: str = ""
    regime: Regime

    @abstractmethod
    def exact_ratio(self, j: int) -> Optional[int]:
        """r_{j-1}/r_j as an int when it is one of moderate size, else None."""

    @abstractmethod
    def ratio_lower_bound(self, j: int) -> Fraction:
        """Certified lower bound of r_{i-1}/r_i for every i >= j."""

    @abstractmethod
    def term_tower(self, j: int) -> TowerMag:
        """r_j as a TowerMag."""

    @abstractmethod
    def materialize_term(self, j: int) -> Optional[Fraction]:
        """r_j as an exact rational, or None when it is not representable."""

    def term_bits(self, j: int) -> Optional[int]:
        """Binary size of the denominator of r_j, or None when r_j is not rational."""
        exact = self.materialize_term(j)
        return exact.denominator.bit_length() if exact is not None else None

    def term_bounds(self, j: int, bits: int) -> Bounds:
        exact = self.materialize_term(j)
        if exact is not None:
            return exact, exact
        return self.term_tower(j).bounds(bits)

    def log_reciprocal(self, j: int) -> TowerSum:
        """ln(1/r_j) as a symbolic sum."""
        return self.term_tower(j).log_reciprocal()

    def psi_log_reciprocal(self, k: int, j: int) -> TowerSum:
        """ln(1/ψ_j(r_k)); valid since r_k <= 1."""
        if j == 0:
            return self.log_reciprocal(k)
        return self.term_tower(k).psi(j).log_reciprocal()

    def unit(self, j: int) -> GapCombo:
        return GapCombo.unit(self, j)

    def materialize(self, combo: GapCombo) -> Optional[Fraction]:
        """Exact value of a combination, or None if some term is symbolic."""
        total = Fraction(0)
        for j, c in enumerate(combo.coeffs):
            if not c:
                continue
            term = self.materialize_term(j)
            if term is None:
                return None
            total += c * term
        return total

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class RationalFastBasis(GapBasis):
    """r_0 = 1, r_1 = 1/16, r_{k+1} = r_k^(k+2)."""

    name = "rational"
    regime = Regime.RATIONAL_FAST

    def _gap_bits(self, j: int) -> int:
        return 4 * (rational_exponent(j) - rational_exponent(j - 1))

    def exact_ratio(self, j: int) -> Optional[int]:
        bits = self._gap_bits(j)
        return 1 << bits if bits <= EXACT_RATIO_BITS else None

    def ratio_lower_bound(self, j: int) -> Fraction:
        return Fraction(1 << min(self._gap_bits(max(j, 1)), 64))

    def term_tower(self, j: int) -> TowerMag:
        bits = 4 * rational_exponent(j)
        if bits > MATERIALIZE_BITS:
            raise MagnitudeOverflowError(f"r_{j} needs {bits} bits", details={"k": j})
        return TowerMag(0, Fraction(1 << bits))

    def materialize_term(self, j: int) -> Optional[Fraction]:
        bits = 4 * rational_exponent(j)
        if bits > MATERIALIZE_BITS:
            return None
        return Fraction(1, 1 << bits)

    def term_bits(self, j: int) -> Optional[int]:
        return 4 * rational_exponent(j) + 1

    def term_bounds(self, j: int, bits: int) -> Bounds:
        exponent = 4 * rational_exponent(j)
        if exponent > bits + 64:
            return Fraction(0), Fraction(1, 1 << (bits + 64))
        exact = Fraction(1, 1 << exponent)
        return exact, exact

    def log_reciprocal(self, j: int) -> TowerSum:
        return TowerSum(logs=(LogAtom(Fraction(4 * rational_exponent(j)), Fraction(2)),))


class TowerFastBasis(GapBasis):
    """r_0 = 1, r_k = 1/exp_{d_k}(16) with d_{k+1} = d_k + k + 1.

    Each step sits one exponential level below ψ_k(r_k), so
    r_{k+1} <= min(r_k/16, ψ_k(r_k)).
    """

    name = "tower"
    regime = Regime.TOWER_FAST

    def exact_ratio(self, j: int) -> Optional[int]:
        return 16 if j == 1 else None

    def ratio_lower_bound(self, j: int) -> Fraction:
        return Fraction(16) if j <= 1 else TOWER_RATIO_FLOOR

    def term_tower(self, j: int) -> TowerMag:
        if j == 0:
            return TowerMag(0, Fraction(1))
        return TowerMag(tower_depth(j), TOWER_TOP)

    def materialize_term(self, j: int) -> Optional[Fraction]:
        if j == 0:
            return Fraction(1)
        if j == 1:
            return Fraction(1, 16)
        return None


class GeometricBasis(GapBasis):
    """r_k = 3^(-k), the middle-thirds scales."""

    name = "geometric"
    regime = Regime.GEOMETRIC

    def exact_ratio(self, j: int) -> Optional[int]:
        return 3

    def ratio_lower_bound(self, j: int) -> Fraction:
        return Fraction(3)

    def term_tower(self, j: int) -> TowerMag:
        return TowerMag(0, Fraction(3 ** j))

    def materialize_term(self, j: int) -> Optional[Fraction]:
        return Fraction(1, 3 ** j)

    def log_reciprocal(self, j: int) -> TowerSum:
        return TowerSum(logs=(LogAtom(Fraction(j), Fraction(3)),))


_BASES: Dict[Regime, GapBasis] = {
    Regime.RATIONAL_FAST: RationalFastBasis(),
    Regime.TOWER_FAST: TowerFastBasis(),
    Regime.GEOMETRIC: GeometricBasis(),
}


def basis_for(regime: Union[str, Regime]) -> GapBasis:
    return _BASES[Regime.parse(regime)]


def basis_by_name(name: str) -> GapBasis:
    for basis in _BASES.values():
        if basis.name == name:
            return basis
    raise ConfigError(f"Unknown gap basis: {name!r}")


@lru_cache(maxsize=None)
def _fast_sequence(regime: Regime, k: int) -> GapCombo:
    return basis_for(regime).unit(k)


def fast_sequence(regime: Union[str, Regime], k: int) -> GapCombo:
    """The k-th scale r_k of a regime as an exact basis combination.

    Args:
        regime: Gap regime
        k: Index, k >= 0

    Returns:
        Memoized GapCombo equal to r_k
    """
    if k < 0:
        raise ValueError(f"sequence index must be non-negative, got {k}")
    return _fast_sequence(Regime.parse(regime), k)


@dataclass
class CheckReport:
    """Outcome of a certified per-k check over a range of indices."""
    regime: str
    check: str
    k_start: int
    k_max: int
    passed: bool = True
    checked: int = 0
    unknown: int = 0
    first_failure: Optional[Dict[str, Any]] = None
    trace: List[Dict[str, Any]] = field(default_factory=list)

    def record(self, k: int, verdict: Ordering, accept: tuple, **extra: Any) -> None:
        self.checked += 1
        status = "pass" if verdict in accept else ("unknown" if verdict is Ordering.UNKNOWN else "fail")
        entry = {"k": k, "verdict": status, **extra}
        self.trace.append(entry)
        if status == "unknown":
            self.unknown += 1
        if status != "pass":
            self.passed = False
            if self.first_failure is None:
                self.first_failure = entry

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def separation_check(
    regime: Union[str, Regime],
    factor: Rational,
    k_max: int,
    strict: bool = True
) -> CheckReport:
    """Certify factor * r_{k+1} < r_k (or <=) for every k < k_max.

    Works on ln(1/r_{k+1}) - ln(1/r_k) - ln(factor), so no r_k is materialized.
    """
    basis = basis_for(regime)
    engine = engine_for()
    report = CheckReport(basis.name, f"separation:{factor}", 0, k_max)
    accept = (Ordering.GT,) if strict else (Ordering.GT, Ordering.EQ)
    log_factor = TowerSum(logs=(LogAtom(Fraction(-1), Fraction(factor)),))
    for k in range(k_max):
        margin = basis.log_reciprocal(k + 1) + (-basis.log_reciprocal(k)) + log_factor
        report.record(k, engine.sign(margin), accept)
    return report


def fastness_check(regime: Union[str, Regime], j: int, k_max: int) -> CheckReport:
    """Certify r_{k+1} <= ψ_j(r_k) for k in [max(1, j), k_max] and 16 r_{k+1} <= r_k for k < k_max.

    The first failing comparison stops the ψ sweep; the rational regime is
    only fast against polynomial scales and fails for every j >= 1.
    """
    if j < 0:
        raise ValueError(f"iterate index must be non-negative, got {j}")
    basis = basis_for(regime)
    engine = engine_for()
    k_start = max(1, j)
    report = CheckReport(basis.name, f"fastness:psi_{j}", k_start, k_max)

    for k in range(k_start, k_max + 1):
        if basis.regime is Regime.TOWER_FAST:
            bound = basis.term_tower(k).psi(j)
            verdict = mag_compare(basis.term_tower(k + 1), bound).reversed()
        else:
            margin = basis.log_reciprocal(k + 1) + (-basis.psi_log_reciprocal(k, j))
            verdict = engine.sign(margin)
        report.record(k, verdict, (Ordering.GT, Ordering.EQ), check="psi")
        if verdict not in (Ordering.GT, Ordering.EQ):
            logger.info(f"{basis.name}: r_{k + 1} <= psi_{j}(r_{k}) fails ({verdict.value})")
            break

    separation = separation_check(regime, 16, k_max, strict=False)
    for entry in separation.trace:
        report.checked += 1
        report.trace.append({**entry, "check": "separation"})
    report.unknown += separation.unknown
    if not separation.passed:
        report.passed = False
        if report.first_failure is None and separation.first_failure is not None:
            report.first_failure = {**separation.first_failure, "check": "separation"}
    return report

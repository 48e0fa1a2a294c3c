"""
System module for Sparse Forge.
Cantor systems: level sets E_k built by iterated gap removal, and address access.
"""
import logging
import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Union

from config import config
from errors import ConfigError, DepthExceededError
from exact_sets.intervals import Interval, IntervalSet, remove_gaps
from exact_sets.scalars import GapCombo, Scalar
from magnitudes.sequences import GapBasis, Regime, basis_for

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]


class GapRule(Enum):
    """How each level removes gaps."""
    THEOREM_B = "theorem-b"
    MIDDLE_THIRDS = "middle-thirds"
    GAP_ENCODED = "gap-encoded"

    @classmethod
    def parse(cls, token: Union[str, 'GapRule']) -> 'GapRule':
        if isinstance(token, GapRule):
            return token
        normalized = str(token).strip().lower().replace("_", "-")
        for rule in cls:
            if rule.value == normalized:
                return rule
        raise ConfigError(f"Unknown gap rule: {token!r}")


@dataclass(frozen=True)
class Address:
    """Finite left/right path down the level-set recursion: 0 = left block, 1 = right block."""
    bits: str = ""

    def __post_init__(self) -> None:
        if any(ch not in "01" for ch in self.bits):
            raise ValueError(f"address must be a bit string, got {self.bits!r}")

    def __len__(self) -> int:
        return len(self.bits)

    def prefix(self, n: int) -> 'Address':
        return Address(self.bits[:n])

    def child(self, bit: str) -> 'Address':
        return Address(self.bits + bit)

    def __str__(self) -> str:
        return self.bits


def all_addresses(length: int) -> Iterator[Address]:
    """Addresses of a given length in lexicographic order."""
    for index in range(1 << length):
        yield Address(format(index, f"0{length}b") if length else "")


class CantorSystem:
    """A gap rule with its cached level sets E_0 ⊇ E_1 ⊇ ... up to a maximum depth.

    Levels are built lazily in order; a built level is never modified.
    """

    def __init__(
        self,
        rule: Union[str, GapRule] = GapRule.THEOREM_B,
        regime: Union[str, Regime, None] = None,
        depth: Optional[int] = None,
        lengths: Optional[Sequence[Rational]] = None
    ):
        self.rule = GapRule.parse(rule)
        if self.rule is not GapRule.THEOREM_B:
            self.regime = Regime.GEOMETRIC
        else:
            self.regime = Regime.parse(regime if regime is not None else config.REGIME)
        self.basis: GapBasis = basis_for(self.regime)
        self.depth = config.KMAX if depth is None else depth
        if self.depth < 0:
            raise ConfigError(f"depth must be non-negative, got {self.depth}")
        self.lengths = tuple(Fraction(x) for x in (lengths or ()))

        self._lock = threading.Lock()
        self._levels: List[IntervalSet] = []

    @property
    def symbolic(self) -> bool:
        """True when scales are basis combinations rather than rationals."""
        return self.rule is GapRule.THEOREM_B

    def scale(self, k: int) -> Scalar:
        """r_k of the rule: a basis combination or an exact rational."""
        if self.symbolic:
            return self.basis.unit(k)
        return Fraction(1, 3 ** k)

    @property
    def zero(self) -> Scalar:
        return GapCombo(self.basis, ()) if self.symbolic else Fraction(0)

    @property
    def unit_box(self) -> Interval:
        return Interval(self.zero, self.scale(0))

    def _check_depth(self, k: int) -> None:
        if k < 0:
            raise ValueError(f"level must be non-negative, got {k}")
        if k > self.depth:
            raise DepthExceededError(
                f"level {k} exceeds the configured depth {self.depth}",
                details={"level": k, "depth": self.depth}
            )

    def _next_level(self, current: IntervalSet, k: int) -> IntervalSet:
        r_k, r_next = self.scale(k), self.scale(k + 1)
        gaps = [Interval(c.lo + r_next, c.lo + r_k - r_next) for c in current]
        return remove_gaps(current, gaps, self.unit_box)

    def level_set(self, k: int) -> IntervalSet:
        """E_k; building level k forces every level below it.

        Args:
            k: Level, 0 <= k <= depth

        Returns:
            Exact IntervalSet

        Raises:
            DepthExceededError: k is beyond the configured depth
        """
        self._check_depth(k)
        if self.rule is GapRule.GAP_ENCODED:
            from cantor.gap_encoded import gap_encoded_set
            return gap_encoded_set(self.lengths, k)
        with self._lock:
            if not self._levels:
                self._levels.append(IntervalSet((self.unit_box,)))
            while len(self._levels) <= k:
                level = len(self._levels) - 1
                self._levels.append(self._next_level(self._levels[level], level))
                logger.debug(f"{self.rule.value}: built level {level + 1} with {len(self._levels[-1])} components")
            return self._levels[k]

    def address_interval(self, addr: Union[str, Address]) -> Interval:
        """The component of E_{len(addr)} reached by following the address.

        Raises:
            DepthExceededError: The address is longer than the configured depth
        """
        addr = addr if isinstance(addr, Address) else Address(addr)
        self._check_depth(len(addr))
        if self.rule is GapRule.GAP_ENCODED:
            raise ConfigError("gap-encoded sets are not addressed by left/right paths")
        lo = self.zero
        for i, bit in enumerate(addr.bits):
            if bit == "1":
                lo = lo + (self.scale(i) - self.scale(i + 1))
        return Interval(lo, lo + self.scale(len(addr)))

    def address_point(self, addr: Union[str, Address]) -> Scalar:
        """Left endpoint of the address interval; a point of every deeper level."""
        return self.address_interval(addr).lo

    def endpoints(self, k: int) -> List[Scalar]:
        return self.level_set(k).endpoints()

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"rule": self.rule.value, "regime": self.regime.value, "depth": self.depth}
        if self.lengths:
            data["lengths"] = [str(x) for x in self.lengths]
        return data

    def __repr__(self) -> str:
        return f"CantorSystem(rule={self.rule.value}, regime={self.regime.value}, depth={self.depth})"

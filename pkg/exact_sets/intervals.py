"""
Intervals module for Sparse Forge.
Closed intervals with exact endpoints and normalized finite unions of them.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from errors import InvalidIntervalError
from exact_sets.scalars import (
    Scalar, scalar_compare, scalar_le, scalar_lt, scalar_max, scalar_min, sort_key
)
from magnitudes.towers import Ordering

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; lo == hi is a point."""
    lo: Scalar
    hi: Scalar

    def __post_init__(self) -> None:
        if isinstance(self.lo, int):
            object.__setattr__(self, 'lo', Fraction(self.lo))
        if isinstance(self.hi, int):
            object.__setattr__(self, 'hi', Fraction(self.hi))
        if scalar_compare(self.lo, self.hi) is Ordering.GT:
            raise InvalidIntervalError(f"Interval lower bound exceeds upper bound: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Scalar:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Scalar:
        return (self.lo + self.hi) / 2

    @property
    def is_point(self) -> bool:
        return scalar_compare(self.lo, self.hi) is Ordering.EQ

    def contains(self, value: Scalar) -> bool:
        return scalar_le(self.lo, value) and scalar_le(value, self.hi)

    def contains_interval(self, other: 'Interval') -> bool:
        return scalar_le(self.lo, other.lo) and scalar_le(other.hi, self.hi)

    def translate(self, offset: Scalar) -> 'Interval':
        return Interval(self.lo + offset, self.hi + offset)

    def scale(self, factor: Rational) -> 'Interval':
        if factor <= 0:
            raise InvalidIntervalError(f"scale factor must be positive, got {factor}")
        return Interval(self.lo * factor, self.hi * factor)

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


UNIT_INTERVAL = Interval(Fraction(0), Fraction(1))


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, pairwise disjoint, non-touching closed intervals.

    Build through normalize() unless the components are already canonical.
    """
    components: Tuple[Interval, ...] = ()

    @classmethod
    def of(cls, intervals: Iterable[Interval]) -> 'IntervalSet':
        return normalize(list(intervals))

    @classmethod
    def single(cls, lo: Scalar, hi: Scalar) -> 'IntervalSet':
        return cls((Interval(lo, hi),))

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.components)

    def __getitem__(self, index: int) -> Interval:
        return self.components[index]

    @property
    def is_empty(self) -> bool:
        return not self.components

    def hull(self) -> Interval:
        if not self.components:
            raise InvalidIntervalError("empty set has no hull")
        return Interval(self.components[0].lo, self.components[-1].hi)

    def endpoints(self) -> List[Scalar]:
        points: List[Scalar] = []
        for comp in self.components:
            points.append(comp.lo)
            if not comp.is_point:
                points.append(comp.hi)
        return points

    def gaps(self) -> List[Interval]:
        """Closures of the bounded complementary gaps, left to right."""
        return [Interval(a.hi, b.lo) for a, b in zip(self.components, self.components[1:])]

    def contains_point(self, value: Scalar) -> bool:
        return any(comp.contains(value) for comp in self.components)

    def is_subset_of(self, other: 'IntervalSet') -> bool:
        """Exact containment by a merge walk over both component lists."""
        j = 0
        theirs = other.components
        for comp in self.components:
            while j < len(theirs) and scalar_lt(theirs[j].hi, comp.lo):
                j += 1
            if j == len(theirs) or not theirs[j].contains_interval(comp):
                return False
        return True

    def translate(self, offset: Scalar) -> 'IntervalSet':
        return IntervalSet(tuple(comp.translate(offset) for comp in self.components))

    def scale(self, factor: Rational) -> 'IntervalSet':
        return IntervalSet(tuple(comp.scale(factor) for comp in self.components))

    def __str__(self) -> str:
        return "{" + ", ".join(str(c) for c in self.components) + "}"


def normalize(intervals: Sequence[Interval]) -> IntervalSet:
    """Canonical disjoint sorted representation of a union of closed intervals.

    Touching intervals merge. Idempotent.

    Args:
        intervals: Intervals in any order

    Returns:
        Normalized IntervalSet

    Raises:
        IncomparableError: Two endpoints could not be ordered
    """
    if not intervals:
        return IntervalSet()
    key = sort_key([iv.lo for iv in intervals])
    ordered = sorted(intervals, key=lambda iv: key(iv.lo))
    merged: List[Interval] = []
    lo, hi = ordered[0].lo, ordered[0].hi
    for iv in ordered[1:]:
        if scalar_le(iv.lo, hi):
            hi = scalar_max(hi, iv.hi)
        else:
            merged.append(Interval(lo, hi))
            lo, hi = iv.lo, iv.hi
    merged.append(Interval(lo, hi))
    return IntervalSet(tuple(merged))


class SetOp(Enum):
    UNION = "union"
    INTERSECT = "intersect"
    COMPLEMENT_WITHIN = "complement_within"


def _intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    pieces: List[Interval] = []
    i = j = 0
    while i < len(a) and j < len(b):
        x, y = a[i], b[j]
        lo, hi = scalar_max(x.lo, y.lo), scalar_min(x.hi, y.hi)
        if scalar_le(lo, hi):
            pieces.append(Interval(lo, hi))
        if scalar_lt(x.hi, y.hi):
            i += 1
        else:
            j += 1
    return normalize(pieces)


def _complement_within(a: IntervalSet, box: Interval) -> IntervalSet:
    pieces: List[Interval] = []
    cursor = box.lo
    for comp in a:
        if scalar_lt(comp.hi, box.lo):
            continue
        if scalar_lt(box.hi, comp.lo):
            break
        if scalar_lt(cursor, comp.lo):
            pieces.append(Interval(cursor, comp.lo))
        cursor = scalar_max(cursor, comp.hi)
    if scalar_lt(cursor, box.hi):
        pieces.append(Interval(cursor, box.hi))
    return normalize(pieces)


def set_algebra(op: SetOp, a: IntervalSet, b: Union[IntervalSet, Interval]) -> IntervalSet:
    """Exact set operations on normalized interval sets.

    COMPLEMENT_WITHIN returns the closure of box minus A, with B the box.

    Args:
        op: Operation
        a: Left operand
        b: Right operand, or the box for COMPLEMENT_WITHIN

    Returns:
        Normalized result
    """
    if op is SetOp.COMPLEMENT_WITHIN:
        box = b if isinstance(b, Interval) else b.hull()
        return _complement_within(a, box)
    other = IntervalSet((b,)) if isinstance(b, Interval) else b
    if op is SetOp.UNION:
        return normalize(list(a.components) + list(other.components))
    if op is SetOp.INTERSECT:
        return _intersect(a, other)
    raise ValueError(f"unsupported set operation: {op}")


def remove_gaps(a: IntervalSet, gaps: Sequence[Interval], box: Optional[Interval] = None) -> IntervalSet:
    """A minus the open interiors of the given gaps."""
    box = box or a.hull()
    holes = normalize(list(gaps))
    return set_algebra(SetOp.INTERSECT, a, set_algebra(SetOp.COMPLEMENT_WITHIN, holes, box))

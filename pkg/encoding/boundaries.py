"""
Boundaries module for Sparse Forge.
Gap data of a finite interval set and the inverse reconstruction from gaps.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Sequence

from errors import InvalidIntervalError, NoGapsError, OverlappingGapsError
from exact_sets.intervals import Interval, IntervalSet
from exact_sets.scalars import Scalar, scalar_key, scalar_lt
from exact_sets.serialization import scalar_to_json

logger = logging.getLogger(__name__)


class BoundaryKind(Enum):
    MIDPOINTS = "midpoints"
    LEFT_ENDPOINTS = "left-endpoints"
    GAP_LENGTHS = "gap-lengths"


@dataclass(frozen=True)
class GapDescriptor:
    """A bounded complementary gap (left, right) with its midpoint and length."""
    left: Scalar
    right: Scalar

    def __post_init__(self) -> None:
        if not scalar_lt(self.left, self.right):
            raise InvalidIntervalError(f"gap needs left < right, got ({self.left}, {self.right})")

    @classmethod
    def of(cls, gap: Interval) -> 'GapDescriptor':
        return cls(gap.lo, gap.hi)

    @property
    def midpoint(self) -> Scalar:
        return (self.left + self.right) / 2

    @property
    def length(self) -> Scalar:
        return self.right - self.left

    def to_dict(self) -> Dict[str, Any]:
        return {
            "left": scalar_to_json(self.left), "right": scalar_to_json(self.right),
            "midpoint": scalar_to_json(self.midpoint), "length": scalar_to_json(self.length),
        }


def gap_descriptors(a: IntervalSet) -> List[GapDescriptor]:
    """Bounded complementary gaps of A, left to right.

    Raises:
        NoGapsError: A has fewer than two components
    """
    if len(a) < 2:
        raise NoGapsError(f"a set with {len(a)} component(s) has no bounded gaps")
    return [GapDescriptor.of(gap) for gap in a.gaps()]


def boundary_extract(a: IntervalSet, kind: BoundaryKind) -> List[Scalar]:
    """Midpoints, left endpoints or lengths of the bounded gaps of A, left to right.

    Args:
        a: Normalized interval set with at least two components
        kind: Which gap datum to return

    Returns:
        Exact scalars, one per gap

    Raises:
        NoGapsError: A has fewer than two components
    """
    gaps = gap_descriptors(a)
    if kind is BoundaryKind.MIDPOINTS:
        return [g.midpoint for g in gaps]
    if kind is BoundaryKind.LEFT_ENDPOINTS:
        return [g.left for g in gaps]
    return [g.length for g in gaps]


def reconstruct_from_gaps(hull: Interval, gaps: Sequence[GapDescriptor]) -> IntervalSet:
    """The hull with the open gaps removed; inverse of gap_descriptors.

    Args:
        hull: Enclosing closed interval
        gaps: Pairwise disjoint gaps inside the hull, in any order

    Returns:
        Normalized IntervalSet

    Raises:
        OverlappingGapsError: Two gaps overlap or a gap leaves the hull
    """
    ordered = sorted(gaps, key=lambda g: scalar_key(g.left))
    pieces: List[Interval] = []
    cursor = hull.lo
    for gap in ordered:
        if scalar_lt(gap.left, cursor):
            raise OverlappingGapsError(
                f"gap ({gap.left}, {gap.right}) overlaps its neighbour or leaves the hull",
                details={"gap": gap.to_dict()}
            )
        pieces.append(Interval(cursor, gap.left))
        cursor = gap.right
    if scalar_lt(hull.hi, cursor):
        raise OverlappingGapsError(f"gap ending at {cursor} leaves the hull {hull}")
    pieces.append(Interval(cursor, hull.hi))
    logger.debug(f"reconstructed {len(pieces)} components from {len(ordered)} gaps")
    return IntervalSet(tuple(pieces))

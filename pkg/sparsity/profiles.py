"""
Profiles module for Sparse Forge.
Covering-number profiles N(A, r) over a list of radii, with closed-form cross checks.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from cantor.system import CantorSystem, GapRule
from config import config
from errors import ProfileMismatchError
from exact_sets.covering import covering_number
from exact_sets.intervals import Interval, IntervalSet
from exact_sets.scalars import Scalar, scalar_compare, scalar_le, scalar_lt, sorted_scalars
from exact_sets.serialization import scalar_to_json
from magnitudes.towers import Ordering

logger = logging.getLogger(__name__)

ClosedForm = Callable[[Scalar], Optional[int]]


class ProfileMethod(Enum):
    """Provenance of a covering count."""
    GREEDY_EXACT = "greedy-exact"
    CLOSED_FORM = "closed-form"
    BOUND = "bound"


@dataclass(frozen=True)
class ProfileEntry:
    r: Scalar
    n: int
    method: ProfileMethod

    def to_dict(self) -> Dict[str, Any]:
        return {"r": scalar_to_json(self.r), "N": self.n, "method": self.method.value}


@dataclass(frozen=True)
class CoveringProfile:
    """Entries ordered by strictly decreasing radius; counts never decrease along the list."""
    entries: Tuple[ProfileEntry, ...]
    source: str = ""

    def __post_init__(self) -> None:
        for a, b in zip(self.entries, self.entries[1:]):
            if not scalar_lt(b.r, a.r):
                raise ValueError(f"profile radii must strictly decrease: {a.r} then {b.r}")
            if b.n < a.n:
                raise ValueError(f"covering counts must not decrease as r shrinks: {a.n} then {b.n}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def radii(self) -> List[Scalar]:
        return [e.r for e in self.entries]

    def counts(self) -> List[int]:
        return [e.n for e in self.entries]

    def to_dict(self) -> Dict[str, Any]:
        return {"source": self.source, "entries": [e.to_dict() for e in self.entries]}


def regime_radii(system: CantorSystem, window: Tuple[int, int]) -> List[Scalar]:
    """Scales r_lo, ..., r_hi of a Cantor system, largest first."""
    lo, hi = window
    if lo < 0 or hi < lo:
        raise ValueError(f"invalid radius window {lo}:{hi}")
    return [system.scale(k) for k in range(lo, hi + 1)]


def closed_form_for(system: CantorSystem, depth: int) -> Optional[ClosedForm]:
    """N(E_depth, r) for r in [r_{k+1}, r_k) with k < depth: 2^(k+1); 1 once r >= r_0.

    Each level-k component spans exactly r_k > r of E_depth, so it needs two
    cubes, and neighbouring level-k components sit more than r apart.
    Radii below r_depth have no closed form here.

    Returns:
        Callable mapping r to its count or None, or None for rules without a closed form
    """
    if system.rule not in (GapRule.THEOREM_B, GapRule.MIDDLE_THIRDS):
        return None

    def count(r: Scalar) -> Optional[int]:
        if scalar_le(system.scale(0), r):
            return 1
        for k in range(depth):
            if scalar_le(system.scale(k + 1), r):
                return 2 ** (k + 1)
        return None

    return count


def _entry(a: IntervalSet, r: Scalar, closed_form: Optional[ClosedForm], verify: bool) -> ProfileEntry:
    predicted = closed_form(r) if closed_form is not None else None
    if predicted is not None and not verify:
        return ProfileEntry(r, predicted, ProfileMethod.CLOSED_FORM)
    greedy = covering_number(a, r)
    if predicted is None:
        return ProfileEntry(r, greedy, ProfileMethod.GREEDY_EXACT)
    if predicted != greedy:
        raise ProfileMismatchError(
            f"closed form gives {predicted} cubes at r={r}, greedy gives {greedy}",
            details={"r": scalar_to_json(r), "closed_form": predicted, "greedy": greedy}
        )
    return ProfileEntry(r, predicted, ProfileMethod.CLOSED_FORM)


def covering_profile(
    a: IntervalSet,
    radii: Sequence[Scalar],
    closed_form: Optional[ClosedForm] = None,
    verify: bool = True,
    workers: Optional[int] = None
) -> CoveringProfile:
    """Exact covering numbers of A at each radius.

    Args:
        a: Nonempty interval set
        radii: Positive radii; duplicates are dropped and order is normalized to decreasing
        closed_form: Optional closed-form count; used as CLOSED_FORM when it applies
        verify: Run greedy alongside the closed form and require agreement
        workers: Thread count for independent radii (default: configured)

    Returns:
        CoveringProfile ordered by decreasing radius

    Raises:
        ProfileMismatchError: Closed form and greedy disagree
        IncomparableError: A radius could not be ordered against an endpoint
    """
    ordered: List[Scalar] = []
    for r in reversed(sorted_scalars(radii)):
        if not ordered or scalar_compare(ordered[-1], r) is not Ordering.EQ:
            ordered.append(r)

    workers = workers or config.WORKERS
    if workers > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda r: _entry(a, r, closed_form, verify), ordered))
    else:
        entries = [_entry(a, r, closed_form, verify) for r in ordered]

    logger.info(f"Covering profile: {len(entries)} radii, counts {[e.n for e in entries]}")
    return CoveringProfile(tuple(entries), source=f"{len(a)} components")


def _product_cover(xs: Sequence[Fraction], ys: Sequence[Fraction], r: Fraction) -> int:
    """Minimum number of side-r squares covering a finite point grid, by exhaustive search."""
    points = [(x, y) for x in xs for y in ys]
    anchors = [(x, y) for x in xs for y in ys]
    squares = []
    for ax, ay in anchors:
        covered = frozenset(i for i, (x, y) in enumerate(points) if ax <= x <= ax + r and ay <= y <= ay + r)
        squares.append(covered)
    everything = frozenset(range(len(points)))
    for size in range(1, len(points) + 1):
        for combo in itertools.combinations(squares, size):
            if frozenset().union(*combo) == everything:
                return size
    return len(points)


@dataclass
class ProductBoundReport:
    r: Fraction
    axis_count: int
    product_count: int
    bound: int
    holds: bool = field(init=False)

    def __post_init__(self) -> None:
        self.holds = self.product_count <= self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {"r": str(self.r), "axis_count": self.axis_count, "product_count": self.product_count,
                "bound": self.bound, "holds": self.holds}


def product_cover_bound(points: Sequence[Fraction], r: Fraction) -> ProductBoundReport:
    """Compare an exhaustive cover count of P x P with N(P, r)^2.

    Squares are anchored at grid points, which loses nothing: any cover can be
    shifted until each square's lower-left corner is the minimum of the points it holds.

    Args:
        points: A finite sample of the set, such as level-K endpoints, at most 4 points
        r: Side length

    Returns:
        ProductBoundReport
    """
    xs = sorted(Fraction(x) for x in points)
    if len(xs) > 4:
        raise ValueError(f"exhaustive product covers are limited to 4 points per axis, got {len(xs)}")
    axis = covering_number(IntervalSet(tuple(Interval(x, x) for x in dict.fromkeys(xs))), Fraction(r))
    report = ProductBoundReport(Fraction(r), axis, _product_cover(xs, xs, Fraction(r)), axis ** 2)
    logger.debug(f"product cover at r={r}: {report.product_count} <= {report.bound} is {report.holds}")
    return report

"""
Covering module for Sparse Forge.
Minimum number of closed length-r intervals covering an interval set.
"""
import logging
import math
from fractions import Fraction
from typing import Optional

from errors import IncomparableError
from exact_sets.intervals import IntervalSet
from exact_sets.scalars import Scalar, scalar_le, scalar_lt, scalar_sign, to_fraction
from magnitudes.towers import Ordering

logger = logging.getLogger(__name__)

# Unit steps per component before the sweep switches to exact division.
MAX_STEPS = 1 << 16


def _cubes_needed(start: Scalar, end: Scalar, r: Scalar) -> Optional[int]:
    """ceil((end - start)/r), at least 1, when both sides materialize."""
    if isinstance(start, Fraction) and isinstance(end, Fraction) and isinstance(r, Fraction):
        length, radius = end - start, r
    else:
        length, radius = to_fraction(end - start), to_fraction(r)
        if length is None or radius is None:
            return None
    return max(1, math.ceil(length / radius))


def covering_number(a: IntervalSet, r: Scalar) -> int:
    """N(A, r) by a left-to-right greedy sweep; optimal in one dimension.

    Cubes are closed and anchored anywhere. Each new cube starts at the
    leftmost point not yet covered.

    Args:
        a: Normalized interval set
        r: Side length, r > 0

    Returns:
        Minimum number of cubes; 0 for the empty set
    """
    if a.is_empty:
        return 0
    if isinstance(r, int):
        r = Fraction(r)
    if scalar_sign(r) is not Ordering.GT:
        raise ValueError(f"covering radius must be positive, got {r}")

    count = 0
    reach: Optional[Scalar] = None
    for comp in a:
        if reach is not None and scalar_le(comp.hi, reach):
            continue
        start = comp.lo if reach is None or scalar_lt(reach, comp.lo) else reach
        if isinstance(start, Fraction) and isinstance(r, Fraction) and isinstance(comp.hi, Fraction):
            n = _cubes_needed(start, comp.hi, r)
            count += n
            reach = start + n * r
            continue

        reach = start + r
        count += 1
        steps = 1
        while scalar_lt(reach, comp.hi):
            if steps >= MAX_STEPS:
                n = _cubes_needed(start, comp.hi, r)
                if n is None:
                    raise IncomparableError(f"component {comp} needs more than {MAX_STEPS} cubes of {r}")
                count += n - steps
                reach = start + n * r
                break
            reach = reach + r
            count += 1
            steps += 1
    return count

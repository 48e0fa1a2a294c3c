"""
Gap encoded module for Sparse Forge.
Closed sets whose complementary gaps carry a prescribed list of lengths.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Sequence, Union

from errors import LengthsNotSummableError
from exact_sets.intervals import IntervalSet, normalize
from cantor.system import CantorSystem, GapRule

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]

# Separator blocks are at most this fraction of the smallest encoded length.
SEPARATOR_SHARE = Fraction(4, 5)


@lru_cache(maxsize=32)
def middle_thirds_block(depth: int) -> IntervalSet:
    """Level `depth` of the middle-thirds construction on [0, 1]."""
    return CantorSystem(GapRule.MIDDLE_THIRDS, depth=depth).level_set(depth)


def _validate(lengths: Sequence[Fraction]) -> Fraction:
    if any(x <= 0 for x in lengths):
        raise LengthsNotSummableError("gap lengths must be positive", details={"lengths": [str(x) for x in lengths]})
    for a, b in zip(lengths, lengths[1:]):
        if not b < a:
            raise LengthsNotSummableError(f"gap lengths must be strictly decreasing: {a} then {b}")
    total = sum(lengths, Fraction(0))
    if total >= 1:
        raise LengthsNotSummableError(f"gap lengths sum to {total}, which leaves no room in [0, 1]")
    return total


def separator_width(lengths: Sequence[Rational]) -> Fraction:
    """Width b of every separator block for the given gap lengths."""
    lengths = [Fraction(x) for x in lengths]
    total = _validate(lengths)
    if not lengths:
        return Fraction(1)
    return min((1 - total) / (len(lengths) + 1), SEPARATOR_SHARE * lengths[-1])


def gap_encoded_set(lengths: Sequence[Rational], depth: int) -> IntervalSet:
    """Blocks and encoded gaps laid out left to right: block, gap, block, ..., block.

    Each block is a middle-thirds level set of the given depth scaled to
    width b, so every internal gap is at most b/3, shorter than each
    encoded length.

    Args:
        lengths: Strictly decreasing positive rationals with sum < 1
        depth: Middle-thirds depth of each separator block

    Returns:
        Normalized IntervalSet inside [0, 1]

    Raises:
        LengthsNotSummableError: The lengths are not strictly decreasing, positive, or sum to 1 or more
    """
    lengths = [Fraction(x) for x in lengths]
    width = separator_width(lengths)
    block = middle_thirds_block(depth).scale(width)

    pieces = []
    cursor = Fraction(0)
    for i in range(len(lengths) + 1):
        pieces.extend(block.translate(cursor).components)
        cursor += width
        if i < len(lengths):
            cursor += lengths[i]
    logger.debug(f"gap-encoded set: {len(lengths)} gaps, separator width {width}, depth {depth}")
    return normalize(pieces)


def factorial_lengths(n_max: int) -> List[Fraction]:
    """1/n! for 2 <= n <= n_max."""
    return [Fraction(1, math.factorial(n)) for n in range(2, n_max + 1)]


def factorial_gap_set(n_max: int, depth: int) -> IntervalSet:
    """Gap-encoded set carrying the gaps 1/2!, 1/3!, ..., 1/n_max!."""
    return gap_encoded_set(factorial_lengths(n_max), depth)


def literal_factorial_witness(n_max: int = 6) -> Dict[str, Any]:
    """Run the per-component central removal of 1/n! and report where it degenerates.

    Each step splits every component of length L into two of length
    (L - 1/n!)/2; the run stops at the first non-positive length.
    """
    length = Fraction(1)
    steps = []
    for n in range(2, n_max + 1):
        gap = Fraction(1, math.factorial(n))
        length = (length - gap) / 2
        steps.append({"n": n, "removed": str(gap), "component_length": str(length)})
        if length <= 0:
            return {"degenerates_at": n, "steps": steps}
    return {"degenerates_at": None, "steps": steps}

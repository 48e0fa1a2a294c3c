"""
Factorial module for Sparse Forge.
Recover the factorials {n!} and an initial segment of the naturals from gap lengths.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from cantor.gap_encoded import factorial_gap_set, factorial_lengths, literal_factorial_witness
from errors import NoChainError
from encoding.boundaries import BoundaryKind, boundary_extract
from exact_sets.scalars import Scalar, to_fraction

logger = logging.getLogger(__name__)


@dataclass
class FactorialDecoding:
    """The recovered chain A = {m!, (m+1)!, ...} and {0} ∪ {σ(a)/a} over consecutive elements."""
    chain: List[int]
    nat_prefix: List[int]

    def to_dict(self) -> Dict[str, Any]:
        return {"chain": self.chain, "nat_prefix": self.nat_prefix}


def _factorial_index(a: int) -> Optional[int]:
    """m >= 2 with m! = a, or None."""
    m, value = 2, 2
    while value < a:
        m += 1
        value *= m
    return m if value == a else None


def decode_factorial(lengths: Sequence[Scalar]) -> FactorialDecoding:
    """Longest run m!, (m+1)!, ... among the reciprocals of the gap lengths.

    Only lengths 1/a with a an integer count; every other length is a decoy.
    Ties go to the run starting lowest.

    Args:
        lengths: Gap lengths in any order

    Returns:
        FactorialDecoding

    Raises:
        NoChainError: Fewer than two consecutive factorials are present
    """
    reciprocals = set()
    for length in lengths:
        value = to_fraction(length)
        if value is not None and value > 0 and value.numerator == 1:
            reciprocals.add(value.denominator)

    best: List[int] = []
    for a in sorted(reciprocals):
        m = _factorial_index(a)
        if m is None or (a // m in reciprocals and m > 2):
            continue
        run = [a]
        while run[-1] * (m + 1) in reciprocals:
            m += 1
            run.append(run[-1] * m)
        if len(run) > len(best):
            best = run

    if len(best) < 2:
        raise NoChainError(
            f"need two consecutive factorials among the gap reciprocals, found {best or 'none'}",
            details={"reciprocals": sorted(reciprocals)[:20]}
        )
    ratios = [b // a for a, b in zip(best, best[1:])]
    logger.debug(f"decoded factorial chain {best}")
    return FactorialDecoding(best, [0] + ratios)


def factorial_demo(n_max: int = 5, depth: int = 3) -> Dict[str, Any]:
    """Encode 1/2!, ..., 1/n_max! as gaps, read the gap lengths back and decode them.

    Args:
        n_max: Largest encoded factorial index
        depth: Middle-thirds depth of the separator blocks

    Returns:
        Report with the decoded chain, the naturals recovered and the
        degeneration point of the literal per-component removal
    """
    encoded = factorial_gap_set(n_max, depth)
    lengths = boundary_extract(encoded, BoundaryKind.GAP_LENGTHS)
    decoding = decode_factorial(lengths)
    expected = [int(1 / x) for x in factorial_lengths(n_max)]
    report = {
        "n_max": n_max,
        "depth": depth,
        "components": len(encoded),
        "gap_count": len(lengths),
        **decoding.to_dict(),
        "expected_chain": expected,
        "recovered": decoding.chain == expected,
        "literal_removal": literal_factorial_witness(n_max),
    }
    logger.info(f"factorial demo n_max={n_max}: chain {decoding.chain}, recovered={report['recovered']}")
    return report

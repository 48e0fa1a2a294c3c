"""
Codec module for Sparse Forge.
The monotone codec g from the rationals into Cantor addresses, and the X-tuple encoding of + and ·.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple, Union

from cantor.system import Address, CantorSystem
from errors import DepthExceededError
from exact_sets.serialization import rational_to_json

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]


class CodecDirection(Enum):
    ENCODE = "encode"
    DECODE = "decode"


def sigma(x: Rational) -> Fraction:
    """Order isomorphism of the reals onto (0, 1): 1/2 + x / (2 (1 + |x|))."""
    x = Fraction(x)
    return Fraction(1, 2) + x / (2 * (1 + abs(x)))


def sigma_inverse(s: Rational) -> Fraction:
    s = Fraction(s)
    if not 0 < s < 1:
        raise ValueError(f"sigma maps onto (0, 1); {s} has no preimage")
    u = 2 * s - 1
    return u / (1 - u) if u >= 0 else u / (1 + u)


def cylinder_bound(x: Rational, depth: int) -> Fraction:
    """Bound on |decode(encode(x)) - x| at depth K: 2 * 2^-K * (1 + |x|)^2."""
    return 2 * Fraction(1, 1 << depth) * (1 + abs(Fraction(x))) ** 2


def _check_depth(depth: int, system: Optional[CantorSystem]) -> None:
    if depth < 1:
        raise ValueError(f"codec depth must be positive, got {depth}")
    if system is not None and depth > system.depth:
        raise DepthExceededError(
            f"address length {depth} exceeds the built depth {system.depth}",
            details={"level": depth, "depth": system.depth}
        )


def encode(x: Rational, depth: int, system: Optional[CantorSystem] = None) -> Address:
    """First K binary digits of σ(x).

    Terminating dyadics take the 10000... expansion, so left endpoints of
    the complementary gaps are never produced.
    """
    _check_depth(depth, system)
    digits = math.floor(sigma(x) * (1 << depth))
    return Address(format(digits, f"0{depth}b"))


def decode(addr: Union[str, Address], system: Optional[CantorSystem] = None) -> Fraction:
    """σ⁻¹ of the dyadic midpoint of the address cylinder."""
    addr = addr if isinstance(addr, Address) else Address(addr)
    _check_depth(len(addr), system)
    digits = int(addr.bits, 2)
    return sigma_inverse(Fraction(2 * digits + 1, 1 << (len(addr) + 1)))


def g_codec(
    direction: CodecDirection,
    value: Union[Rational, str, Address],
    depth: int,
    system: Optional[CantorSystem] = None
) -> Union[Address, Fraction]:
    """Encode a rational into an address of length K, or decode an address back.

    Args:
        direction: ENCODE or DECODE
        value: Rational for ENCODE, address for DECODE
        depth: Address length K
        system: Cantor system whose built depth bounds K

    Returns:
        Address or Fraction
    """
    if direction is CodecDirection.ENCODE:
        return encode(Fraction(value), depth, system)
    addr = value if isinstance(value, Address) else Address(str(value))
    if len(addr) != depth:
        raise ValueError(f"address {addr} does not have length {depth}")
    return decode(addr, system)


def distance_to_naturals(x: Rational) -> Fraction:
    """Distance from x to the nearest natural number, 0 included."""
    x = Fraction(x)
    if x <= 0:
        return -x
    below = Fraction(math.floor(x))
    return min(x - below, below + 1 - x)


@dataclass
class XTuple:
    """(g(x), g(y), g(x+y), g(xy), g(dis(x))) with the exact values encoded."""
    values: Tuple[Fraction, ...]
    addresses: Tuple[Address, ...]
    depth: int

    def decoded(self) -> List[Fraction]:
        return [decode(a) for a in self.addresses]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "depth": self.depth,
            "values": [rational_to_json(v) for v in self.values],
            "addresses": [str(a) for a in self.addresses],
            "bounds": [rational_to_json(cylinder_bound(v, self.depth)) for v in self.values],
        }


def x_tuple(x: Rational, y: Rational, depth: int, system: Optional[CantorSystem] = None) -> XTuple:
    """Addresses of g(x), g(y), g(x+y), g(x·y) and g(distance from x to ℕ) at depth K."""
    x, y = Fraction(x), Fraction(y)
    values = (x, y, x + y, x * y, distance_to_naturals(x))
    addresses = tuple(encode(v, depth, system) for v in values)
    logger.debug(f"x-tuple of ({x}, {y}) at depth {depth}: {[str(a) for a in addresses]}")
    return XTuple(values, addresses, depth)

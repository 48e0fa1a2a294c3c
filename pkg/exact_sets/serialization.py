"""
Serialization module for Sparse Forge.
JSON forms of scalars and interval sets; round trips are bit-exact.

Scalar forms:
    "p/q"                                   exact rational, q >= 1
    {"tower": {"depth": d, "top": "p/q"}}   1 / exp_d(top)
    {"combo": [c_0, ..., c_K], "basis": b}  sum of c_j r_j over gap basis b

"basis" names the gap sequence the coefficients refer to. Readers treat
a combo without it as the rational regime.
"""
import logging
from fractions import Fraction
from typing import Any, Dict, List, Union

from errors import SerializationError
from exact_sets.intervals import Interval, IntervalSet, normalize
from exact_sets.scalars import GapCombo, Scalar
from magnitudes.towers import TowerMag

logger = logging.getLogger(__name__)

JsonScalar = Union[str, Dict[str, Any]]


def rational_to_json(value: Fraction) -> str:
    """Always "p/q", integers included."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def rational_from_json(text: Any) -> Fraction:
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise SerializationError(f"Expected an exact rational string, got {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise SerializationError(f"Invalid rational: {text!r}") from e


def _coefficient_to_json(c: Fraction) -> Union[int, str]:
    return c.numerator if c.denominator == 1 else rational_to_json(c)


def scalar_to_json(value: Scalar) -> JsonScalar:
    """Serialize a scalar in one of the module's three forms."""
    if isinstance(value, TowerMag):
        return {"tower": {"depth": value.depth, "top": rational_to_json(value.top)}}
    if isinstance(value, GapCombo):
        return {"combo": [_coefficient_to_json(c) for c in value.coeffs], "basis": value.basis.name}
    if isinstance(value, (int, Fraction)):
        return rational_to_json(Fraction(value))
    raise SerializationError(f"Cannot serialize scalar of type {type(value).__name__}")


def scalar_from_json(data: JsonScalar) -> Scalar:
    """Inverse of scalar_to_json."""
    if isinstance(data, (str, int)) and not isinstance(data, bool):
        return rational_from_json(data)
    if not isinstance(data, dict):
        raise SerializationError(f"Unrecognized scalar encoding: {data!r}")
    if "tower" in data:
        tower = data["tower"]
        try:
            return TowerMag(int(tower["depth"]), rational_from_json(tower["top"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"Malformed tower scalar: {data!r}") from e
    if "combo" in data:
        # imported here: sequences depends on this package
        from magnitudes.sequences import basis_by_name
        basis = basis_by_name(data.get("basis", "rational"))
        return GapCombo(basis, tuple(rational_from_json(c) for c in data["combo"]))
    raise SerializationError(f"Unrecognized scalar encoding: {data!r}")


def interval_set_to_json(a: IntervalSet) -> List[List[JsonScalar]]:
    return [[scalar_to_json(c.lo), scalar_to_json(c.hi)] for c in a]


def interval_set_from_json(data: Any) -> IntervalSet:
    """Read a JSON array of [lo, hi] pairs, or a document carrying one under "interval_set"."""
    if isinstance(data, dict):
        if "interval_set" not in data:
            raise SerializationError("Document has no 'interval_set' entry")
        data = data["interval_set"]
    if not isinstance(data, list):
        raise SerializationError(f"Interval set must be a JSON array, got {type(data).__name__}")
    intervals = []
    for pair in data:
        if not isinstance(pair, list) or len(pair) != 2:
            raise SerializationError(f"Interval must be a [lo, hi] pair, got {pair!r}")
        intervals.append(Interval(scalar_from_json(pair[0]), scalar_from_json(pair[1])))
    return normalize(intervals)

"""
Symmetries module for Sparse Forge.
Finite linear symmetry groups whose images of the closed factor-2 cell are meant to cover R^n.
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from errors import TieError, UnsupportedDimensionError
from exact_sets.scalars import Scalar, scalar_abs, scalar_compare, scalar_sign, sort_key
from exact_sets.serialization import scalar_to_json
from magnitudes.towers import Ordering

logger = logging.getLogger(__name__)

MAX_DIMENSION = 4


@dataclass(frozen=True)
class QuadSqrt2:
    """a + b·√2 with rational a, b."""
    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, 'a', Fraction(self.a))
        object.__setattr__(self, 'b', Fraction(self.b))

    @classmethod
    def lift(cls, value: Union[int, Fraction, 'QuadSqrt2']) -> 'QuadSqrt2':
        return value if isinstance(value, QuadSqrt2) else cls(Fraction(value))

    def __add__(self, other: Any) -> 'QuadSqrt2':
        other = QuadSqrt2.lift(other)
        return QuadSqrt2(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self) -> 'QuadSqrt2':
        return QuadSqrt2(-self.a, -self.b)

    def __sub__(self, other: Any) -> 'QuadSqrt2':
        return self + (-QuadSqrt2.lift(other))

    def __rsub__(self, other: Any) -> 'QuadSqrt2':
        return QuadSqrt2.lift(other) - self

    def __mul__(self, other: Any) -> 'QuadSqrt2':
        other = QuadSqrt2.lift(other)
        return QuadSqrt2(self.a * other.a + 2 * self.b * other.b, self.a * other.b + self.b * other.a)

    __rmul__ = __mul__

    def sign(self) -> int:
        """Exact sign, comparing a² with 2b² when the parts disagree."""
        sa, sb = (self.a > 0) - (self.a < 0), (self.b > 0) - (self.b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        diff = self.a * self.a - 2 * self.b * self.b
        return sa if diff > 0 else sb

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * 2 ** 0.5

    def __str__(self) -> str:
        if not self.b:
            return str(self.a)
        return f"{self.a}+{self.b}*sqrt2"


Matrix = Tuple[Tuple[QuadSqrt2, ...], ...]


def _identity(n: int) -> Matrix:
    return tuple(tuple(QuadSqrt2(1 if i == j else 0) for j in range(n)) for i in range(n))


@dataclass(frozen=True)
class SymmetryElement:
    """An orthogonal matrix with entries in Q(√2); (Tv)_i = Σ_j m_ij v_j."""
    matrix: Matrix

    @classmethod
    def signed_permutation(cls, perm: Sequence[int], signs: Sequence[int]) -> 'SymmetryElement':
        """(Tv)_i = signs[i] · v[perm[i]]."""
        n = len(perm)
        rows = []
        for i in range(n):
            rows.append(tuple(QuadSqrt2(signs[i] if j == perm[i] else 0) for j in range(n)))
        return cls(tuple(rows))

    @property
    def n(self) -> int:
        return len(self.matrix)

    def as_signed_permutation(self) -> Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
        perm, signs = [], []
        for row in self.matrix:
            nonzero = [(j, x) for j, x in enumerate(row) if x.sign()]
            if len(nonzero) != 1 or not nonzero[0][1].is_rational or abs(nonzero[0][1].a) != 1:
                return None
            perm.append(nonzero[0][0])
            signs.append(int(nonzero[0][1].a))
        return tuple(perm), tuple(signs)

    def apply(self, v: Sequence[Any]) -> Tuple[Any, ...]:
        """Image of v; signed permutations accept any scalar, other elements need rationals or Q(√2)."""
        if len(v) != self.n:
            raise ValueError(f"element acts on R^{self.n}, got {len(v)} coordinates")
        signed = self.as_signed_permutation()
        if signed is not None:
            perm, signs = signed
            return tuple(v[perm[i]] if signs[i] > 0 else -v[perm[i]] for i in range(self.n))
        return tuple(
            sum((m * QuadSqrt2.lift(x) for m, x in zip(row, v)), QuadSqrt2()) for row in self.matrix
        )

    def compose(self, other: 'SymmetryElement') -> 'SymmetryElement':
        """self ∘ other."""
        n = self.n
        return SymmetryElement(tuple(
            tuple(sum((self.matrix[i][k] * other.matrix[k][j] for k in range(n)), QuadSqrt2()) for j in range(n))
            for i in range(n)
        ))

    def inverse(self) -> 'SymmetryElement':
        return SymmetryElement(tuple(zip(*self.matrix)))

    def determinant(self) -> QuadSqrt2:
        total = QuadSqrt2()
        for perm in itertools.permutations(range(self.n)):
            inversions = sum(1 for i, j in itertools.combinations(range(self.n), 2) if perm[i] > perm[j])
            term = QuadSqrt2(-1 if inversions % 2 else 1)
            for i, j in enumerate(perm):
                term = term * self.matrix[i][j]
            total = total + term
        return total

    def to_dict(self) -> Dict[str, Any]:
        signed = self.as_signed_permutation()
        if signed is not None:
            return {"perm": list(signed[0]), "signs": list(signed[1])}
        return {"matrix": [[str(x) for x in row] for row in self.matrix]}


@dataclass
class SymmetryGroup:
    n: int
    elements: Tuple[SymmetryElement, ...]
    reading: str
    caveat: Optional[str] = None
    _index: frozenset = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._index = frozenset(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, element: SymmetryElement) -> bool:
        return element in self._index

    def is_closed(self) -> bool:
        """Exhaustive check of composition and inverses."""
        for a in self.elements:
            if a.inverse() not in self._index:
                return False
            for b in self.elements:
                if a.compose(b) not in self._index:
                    return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "order": self.order, "reading": self.reading, "caveat": self.caveat}


def _closure(generators: Sequence[SymmetryElement]) -> Tuple[SymmetryElement, ...]:
    n = generators[0].n
    seen = {SymmetryElement(_identity(n))}
    frontier = list(seen)
    while frontier:
        fresh = []
        for element in frontier:
            for g in generators:
                product = g.compose(element)
                if product not in seen:
                    seen.add(product)
                    fresh.append(product)
        frontier = fresh
    return tuple(sorted(seen, key=lambda e: [[(x.a, x.b) for x in row] for row in e.matrix]))


def _signed_permutations(n: int) -> Tuple[SymmetryElement, ...]:
    return tuple(
        SymmetryElement.signed_permutation(perm, signs)
        for perm in itertools.permutations(range(n))
        for signs in itertools.product((1, -1), repeat=n)
    )


OCTAGON = "octagon"
CUBE = "cube"

_CUBE_CAVEAT = (
    "signed permutations only; the images of the closed factor-2 cell miss directions "
    "with two equal largest coordinates, such as (1, 1, 1)"
)


def corner_symmetries(n: int, reading: Optional[str] = None) -> SymmetryGroup:
    """The symmetry group used to move difference vectors into the factor-2 cell.

    n = 1 is {±1}; n = 2 is the dihedral group of the regular octagon with
    exact (a + b√2)/2 entries; n = 3, 4 are signed permutations with a
    covering caveat. The cube reading of n = 2 is available for comparison.

    Raises:
        UnsupportedDimensionError: n outside 1..4
    """
    if not 1 <= n <= MAX_DIMENSION:
        raise UnsupportedDimensionError(f"symmetry groups are provided for 1 <= n <= {MAX_DIMENSION}, got {n}")
    reading = reading or (OCTAGON if n == 2 else CUBE)
    if n == 2 and reading == OCTAGON:
        c = QuadSqrt2(0, Fraction(1, 2))
        rotation = SymmetryElement(((c, -c), (c, c)))
        reflection = SymmetryElement.signed_permutation((0, 1), (1, -1))
        group = SymmetryGroup(2, _closure([rotation, reflection]), OCTAGON)
    elif reading == CUBE:
        caveat = _CUBE_CAVEAT if n >= 2 else None
        group = SymmetryGroup(n, _signed_permutations(n), CUBE, caveat)
    else:
        raise UnsupportedDimensionError(f"reading {reading!r} is not available for n={n}")
    logger.debug(f"symmetry group n={n} ({group.reading}): order {group.order}")
    return group


@dataclass(frozen=True)
class SortReduction:
    w: Tuple[Scalar, ...]
    m: int
    element: SymmetryElement

    def to_dict(self) -> Dict[str, Any]:
        return {"w": [scalar_to_json(x) for x in self.w], "m": self.m, "element": self.element.to_dict()}


def sort_reduce(v: Sequence[Scalar]) -> SortReduction:
    """Signed permutation taking v to (w, 0, ..., 0) with w strictly decreasing and positive.

    Raises:
        TieError: Two nonzero coordinates have equal absolute value
    """
    values = [Fraction(x) if isinstance(x, int) else x for x in v]
    n = len(values)
    nonzero = [i for i, x in enumerate(values) if scalar_sign(x) is not Ordering.EQ]
    magnitudes = {i: scalar_abs(values[i]) for i in nonzero}
    key = sort_key(list(magnitudes.values())) if magnitudes else None
    order = sorted(nonzero, key=lambda i: key(magnitudes[i]), reverse=True)
    for i, j in zip(order, order[1:]):
        if scalar_compare(magnitudes[i], magnitudes[j]) is Ordering.EQ:
            raise TieError(
                f"coordinates {i} and {j} tie in absolute value",
                details={"indices": [i, j], "value": scalar_to_json(magnitudes[i])}
            )
    zeros = [i for i in range(n) if i not in magnitudes]
    perm = order + zeros
    signs = [(-1 if scalar_sign(values[i]) is Ordering.LT else 1) for i in order] + [1] * len(zeros)
    element = SymmetryElement.signed_permutation(perm, signs)
    return SortReduction(tuple(magnitudes[i] for i in order), len(order), element)


def closed_cell_contains(u: Sequence[Any]) -> bool:
    """u in the closed factor-2 cell: u_n >= 0 and 2 u_{i+1} <= u_i."""
    coords = [QuadSqrt2.lift(x) for x in u]
    if coords[-1].sign() < 0:
        return False
    return all((a - 2 * b).sign() >= 0 for a, b in zip(coords, coords[1:]))


def default_directions(n: int, radius: int = 2) -> List[Tuple[int, ...]]:
    """Nonzero integer directions with coordinates in [-radius, radius]."""
    return [u for u in itertools.product(range(-radius, radius + 1), repeat=n) if any(u)]


@dataclass
class CoveringReport:
    n: int
    reading: str
    checked: int = 0
    covered: int = 0
    uncovered: List[Tuple[int, ...]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.uncovered

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n, "reading": self.reading, "checked": self.checked, "covered": self.covered,
            "uncovered": [[str(x) for x in u] for u in self.uncovered[:20]],
            "uncovered_count": len(self.uncovered), "passed": self.passed,
        }


def covering_check(group: SymmetryGroup, directions: Optional[Iterable[Sequence[Any]]] = None) -> CoveringReport:
    """For each direction u, look for T in the group with T⁻¹u in the closed factor-2 cell."""
    inverses = [element.inverse() for element in group.elements]
    report = CoveringReport(group.n, group.reading)
    for u in (directions if directions is not None else default_directions(group.n)):
        report.checked += 1
        if any(closed_cell_contains(inverse.apply(tuple(u))) for inverse in inverses):
            report.covered += 1
        else:
            report.uncovered.append(tuple(u))
    logger.info(
        f"covering check n={group.n} ({group.reading}): {report.covered}/{report.checked} directions covered"
    )
    return report



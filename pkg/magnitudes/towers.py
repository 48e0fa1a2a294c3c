"""
Towers module for Sparse Forge.
Tower magnitudes 1/exp_d(t) and certified signs of sums of iterated exponentials.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from config import config
from errors import InvalidIntervalError, MagnitudeOverflowError
from magnitudes.enclosures import (
    Bounds, bits_schedule, exp_bounds, exp_interval, log_bounds, log_interval
)

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]

# Recursion guard for the logarithmic fallback.
MAX_DEPTH = 48
# Above this float magnitude the size key keeps one more exponential level.
_KEY_EXP_LIMIT = 700.0


class Ordering(Enum):
    """Outcome of a certified comparison."""
    LT = "lt"
    EQ = "eq"
    GT = "gt"
    UNKNOWN = "unknown"

    def reversed(self) -> 'Ordering':
        return _REVERSED[self]

    @property
    def decided(self) -> bool:
        return self is not Ordering.UNKNOWN


_REVERSED = {
    Ordering.LT: Ordering.GT,
    Ordering.GT: Ordering.LT,
    Ordering.EQ: Ordering.EQ,
    Ordering.UNKNOWN: Ordering.UNKNOWN,
}


def ordering_from_sign(sign: int) -> Ordering:
    if sign > 0:
        return Ordering.GT
    if sign < 0:
        return Ordering.LT
    return Ordering.EQ


def compare_rationals(a: Rational, b: Rational) -> Ordering:
    return ordering_from_sign((a > b) - (a < b))


@dataclass(frozen=True)
class TowerMag:
    """The positive number 1/exp_depth(top); depth 0 is the rational 1/top."""
    depth: int
    top: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, 'top', Fraction(self.top))
        if self.depth < 0:
            raise InvalidIntervalError(f"Tower depth must be non-negative, got {self.depth}")
        if self.top <= 0:
            raise InvalidIntervalError(f"Tower top must be positive, got {self.top}")

    @classmethod
    def from_rational(cls, value: Rational) -> 'TowerMag':
        value = Fraction(value)
        if value <= 0:
            raise InvalidIntervalError(f"Tower magnitudes are positive, got {value}")
        return cls(0, 1 / value)

    @property
    def is_rational(self) -> bool:
        return self.depth == 0

    def value(self) -> Fraction:
        """Exact value; only defined for depth 0."""
        if self.depth:
            raise ValueError(f"{self} has no exact rational value")
        return 1 / self.top

    def at_most_one(self) -> bool:
        return self.depth > 0 or self.top >= 1

    def psi(self, j: int) -> 'TowerMag':
        """ψ_j for values in (0, 1]: ψ(1/exp_d(t)) = 1/exp_{d+1}(t)."""
        if j < 0:
            raise ValueError("negative iterates are evaluated by magnitudes.psi")
        if not self.at_most_one():
            raise ValueError(f"{self} exceeds 1; use magnitudes.psi for the linear branch")
        return TowerMag(self.depth + j, self.top)

    def bounds(self, bits: int, ceiling: Optional[int] = None) -> Bounds:
        """Certified rational bounds; values below the exp ceiling collapse to [0, tiny]."""
        if self.depth == 0:
            v = 1 / self.top
            return v, v
        ceiling = config.EXP_CEILING if ceiling is None else ceiling
        lo, hi = self.top, self.top
        for _ in range(self.depth):
            if hi > ceiling:
                floor_exp = exp_bounds(min(lo, Fraction(ceiling)), bits, ceiling)[0]
                return Fraction(0), 1 / floor_exp
            lo, hi = exp_interval(lo, hi, bits + 8, ceiling)
        return 1 / hi, 1 / lo

    def log_reciprocal(self) -> 'TowerSum':
        """ln(1/value) = exp_{depth-1}(top), or ln(top) at depth 0."""
        if self.depth == 0:
            return TowerSum(logs=(LogAtom(Fraction(1), self.top),))
        return TowerSum(terms=(TowerTerm(Fraction(1), self.depth - 1, self.top),))

    def to_dict(self) -> Dict[str, Any]:
        return {"tower": {"depth": self.depth, "top": f"{self.top.numerator}/{self.top.denominator}"}}

    def __str__(self) -> str:
        return f"1/exp_{self.depth}({self.top})"


@dataclass(frozen=True)
class TowerTerm:
    """coef * exp_height(top)."""
    coef: Fraction
    height: int
    top: Fraction


@dataclass(frozen=True)
class LogAtom:
    """coef * ln(arg), arg > 0."""
    coef: Fraction
    arg: Fraction


@dataclass(frozen=True)
class TowerSum:
    """Finite sum of tower terms, logarithm atoms and a rational constant."""
    terms: Tuple[TowerTerm, ...] = ()
    logs: Tuple[LogAtom, ...] = ()
    const: Fraction = Fraction(0)

    @classmethod
    def build(
        cls,
        terms: Iterable[Tuple[Rational, int, Rational]] = (),
        logs: Iterable[Tuple[Rational, Rational]] = (),
        const: Rational = 0
    ) -> 'TowerSum':
        return cls(
            tuple(TowerTerm(Fraction(c), h, Fraction(y)) for c, h, y in terms),
            tuple(LogAtom(Fraction(c), Fraction(a)) for c, a in logs),
            Fraction(const),
        )

    def __add__(self, other: 'TowerSum') -> 'TowerSum':
        return TowerSum(self.terms + other.terms, self.logs + other.logs, self.const + other.const)

    def __neg__(self) -> 'TowerSum':
        return TowerSum(
            tuple(TowerTerm(-t.coef, t.height, t.top) for t in self.terms),
            tuple(LogAtom(-a.coef, a.arg) for a in self.logs),
            -self.const,
        )

    def normalized(self) -> 'TowerSum':
        """Merge equal terms, fold height-0 terms into the constant, split powers of two off logs."""
        const = self.const
        merged: Dict[Tuple[int, Fraction], Fraction] = {}
        for t in self.terms:
            if t.height == 0:
                const += t.coef * t.top
            elif t.coef:
                key = (t.height, t.top)
                merged[key] = merged.get(key, Fraction(0)) + t.coef

        log_merged: Dict[Fraction, Fraction] = {}
        for atom in self.logs:
            if not atom.coef:
                continue
            if atom.arg <= 0:
                raise ValueError(f"log atom needs a positive argument, got {atom.arg}")
            num, den = atom.arg.numerator, atom.arg.denominator
            twos = _trailing_zeros(num) - _trailing_zeros(den)
            odd = Fraction(num >> _trailing_zeros(num), den >> _trailing_zeros(den))
            if twos:
                log_merged[Fraction(2)] = log_merged.get(Fraction(2), Fraction(0)) + atom.coef * twos
            if odd != 1:
                log_merged[odd] = log_merged.get(odd, Fraction(0)) + atom.coef

        terms = tuple(TowerTerm(c, h, y) for (h, y), c in sorted(merged.items()) if c)
        logs = tuple(LogAtom(c, a) for a, c in sorted(log_merged.items()) if c)
        return TowerSum(terms, logs, const)


def _trailing_zeros(n: int) -> int:
    return (n & -n).bit_length() - 1


def size_key(height: int, top: Fraction) -> Tuple[int, float]:
    """Approximate (level, x) with exp_level(x) close to exp_height(top).

    Only used to pick a dominant term; every decision is re-certified.
    """
    if abs(top) < Fraction(10) ** 300:
        x = float(top)
    elif top > 0:
        x = math.log(top.numerator) - math.log(top.denominator)
        height += 1
    else:
        return (0, -math.inf)
    while height > 0 and x < _KEY_EXP_LIMIT:
        x = math.exp(x)
        height -= 1
    return (height, x)


def _scale(coef: Fraction, bounds: Bounds) -> Bounds:
    lo, hi = bounds
    if coef >= 0:
        return coef * lo, coef * hi
    return coef * hi, coef * lo


@dataclass
class TowerSignEngine:
    """Certified sign of a TowerSum.

    Tiers: direct enclosure when every tower fits under the exp ceiling,
    exact level stripping for two opposite atoms, coefficient absorption into
    tops, and dominance of the largest term checked through logarithms.
    """
    schedule: Tuple[int, ...] = field(default_factory=bits_schedule)
    ceiling: int = field(default_factory=lambda: config.EXP_CEILING)

    # numeric tier

    def _tower_bounds(self, height: int, top: Fraction, bits: int) -> Bounds:
        lo = hi = top
        for _ in range(height):
            lo, hi = exp_interval(lo, hi, bits + 16, self.ceiling)
        return lo, hi

    def enclose(self, s: TowerSum, bits: int) -> Bounds:
        """Rational bounds of the sum at working precision `bits`.

        Raises:
            MagnitudeOverflowError: Some tower does not fit under the exp ceiling
        """
        lo = hi = s.const
        for t in s.terms:
            t_lo, t_hi = _scale(t.coef, self._tower_bounds(t.height, t.top, bits))
            lo, hi = lo + t_lo, hi + t_hi
        for atom in s.logs:
            a_lo, a_hi = _scale(atom.coef, log_bounds(atom.arg, bits + 16))
            lo, hi = lo + a_lo, hi + a_hi
        return lo, hi

    def _numeric(self, s: TowerSum, bits: int) -> Optional[Ordering]:
        """Sign by direct enclosure; None if the sum straddles zero."""
        lo, hi = self.enclose(s, bits)
        if lo > 0:
            return Ordering.GT
        if hi < 0:
            return Ordering.LT
        if lo == hi == 0:
            return Ordering.EQ
        return None

    def _constant_bound(self, s: TowerSum) -> Fraction:
        """Rational upper bound of |const + logs|."""
        bits = self.schedule[-1]
        lo = hi = s.const
        for atom in s.logs:
            a_lo, a_hi = _scale(atom.coef, log_bounds(atom.arg, bits))
            lo, hi = lo + a_lo, hi + a_hi
        return max(abs(lo), abs(hi))

    # exact tower comparisons

    def tower_vs_rational(self, height: int, top: Fraction, q: Fraction) -> Ordering:
        """Compare exp_height(top) with a rational q."""
        if height == 0:
            return compare_rationals(top, q)
        if q <= 0:
            return Ordering.GT
        for bits in self.schedule:
            lo, hi = top, top
            level = height
            try:
                while level > 0 and hi <= self.ceiling:
                    lo, hi = exp_interval(lo, hi, bits + 16, self.ceiling)
                    level -= 1
            except MagnitudeOverflowError:
                continue
            w_lo, w_hi = q, q
            settled: Optional[Ordering] = None
            for _ in range(level):
                if w_hi <= 0:
                    settled = Ordering.GT
                    break
                if w_lo <= 0:
                    settled = Ordering.UNKNOWN
                    break
                w_lo, w_hi = log_interval(w_lo, w_hi, bits + 16)
            if settled is Ordering.GT:
                return settled
            if settled is Ordering.UNKNOWN:
                continue
            if lo > w_hi:
                return Ordering.GT
            if hi < w_lo:
                return Ordering.LT
            if lo == hi == w_lo == w_hi:
                return Ordering.EQ
        return Ordering.UNKNOWN

    def compare_towers(self, h1: int, y1: Fraction, h2: int, y2: Fraction) -> Ordering:
        """Compare exp_h1(y1) with exp_h2(y2) by stripping common exponential levels."""
        if h1 == h2 and y1 == y2:
            return Ordering.EQ
        common = min(h1, h2)
        h1, h2 = h1 - common, h2 - common
        if h1 == 0 and h2 == 0:
            return compare_rationals(y1, y2)
        if h2 == 0:
            return self.tower_vs_rational(h1, y1, y2)
        return self.tower_vs_rational(h2, y2, y1).reversed()

    def _lift_bound(self, c: Fraction, height: int, top: Fraction, upper: bool) -> Optional[Fraction]:
        """Top y' with c*exp_h(top) <= exp_h(y') (upper) or >= (lower); None if unavailable."""
        if c == 1:
            return top
        bits = self.schedule[-1]
        if upper:
            if c < 1:
                return top
            shift = log_bounds(c, bits)[1]
            candidate = top + shift
        else:
            if c > 1:
                return top
            shift = log_bounds(1 / c, bits)[1]
            candidate = top - shift
        if height >= 2 and min(top, candidate) < 0:
            return None
        return candidate

    def compare_pair(
        self,
        left: Tuple[Rational, int, Rational],
        right: Tuple[Rational, int, Rational],
        depth: int = 0
    ) -> Ordering:
        """Compare cl*exp_hl(yl) with cr*exp_hr(yr) for positive coefficients."""
        cl, hl, yl = Fraction(left[0]), left[1], Fraction(left[2])
        cr, hr, yr = Fraction(right[0]), right[1], Fraction(right[2])
        if cl <= 0 or cr <= 0:
            raise ValueError("compare_pair expects positive coefficients")

        if hl == 0 and hr == 0:
            return compare_rationals(cl * yl, cr * yr)
        if hr == 0:
            return self.tower_vs_rational(hl, yl, cr * yr / cl)
        if hl == 0:
            return self.tower_vs_rational(hr, yr, cl * yl / cr).reversed()

        c = cr / cl
        if c == 1:
            return self.compare_towers(hl, yl, hr, yr)

        upper = self._lift_bound(c, hr, yr, upper=True)
        if upper is not None and self.compare_towers(hl, yl, hr, upper) is Ordering.GT:
            return Ordering.GT
        lower = self._lift_bound(c, hr, yr, upper=False)
        if lower is not None and self.compare_towers(hl, yl, hr, lower) is Ordering.LT:
            return Ordering.LT

        if depth >= MAX_DEPTH:
            return Ordering.UNKNOWN
        logged = TowerSum.build(
            terms=[(1, hl - 1, yl), (-1, hr - 1, yr)],
            logs=[(1, cl), (-1, cr)],
        )
        return self._sign(logged, depth + 1)

    # general sums

    def sign(self, s: TowerSum) -> Ordering:
        """Certified sign of the sum: GT positive, LT negative, EQ zero."""
        return self._sign(s, 0)

    def _sign(self, s: TowerSum, depth: int) -> Ordering:
        s = s.normalized()
        if not s.terms and not s.logs:
            return compare_rationals(s.const, 0)

        for bits in self.schedule:
            try:
                outcome = self._numeric(s, bits)
            except MagnitudeOverflowError:
                break
            if outcome is not None:
                return outcome
        if not s.terms or depth >= MAX_DEPTH:
            return Ordering.UNKNOWN

        pair = self._as_pair(s)
        if pair is not None:
            positive, negative = pair
            return self.compare_pair(positive, negative, depth)
        return self._dominance(s, depth)

    @staticmethod
    def _as_pair(s: TowerSum) -> Optional[Tuple[Tuple[Fraction, int, Fraction], Tuple[Fraction, int, Fraction]]]:
        if s.logs:
            return None
        atoms = [(t.coef, t.height, t.top) for t in s.terms]
        if s.const:
            atoms.append((s.const, 0, Fraction(1)))
        if len(atoms) != 2 or (atoms[0][0] > 0) == (atoms[1][0] > 0):
            return None
        pos, neg = (atoms[0], atoms[1]) if atoms[0][0] > 0 else (atoms[1], atoms[0])
        return pos, (-neg[0], neg[1], neg[2])

    def _dominance(self, s: TowerSum, depth: int) -> Ordering:
        ranked = sorted(s.terms, key=lambda t: size_key(t.height, t.top))
        dominant, others = ranked[-1], ranked[:-1]
        constant = self._constant_bound(s) if (s.const or s.logs) else Fraction(0)
        parts = len(others) + (1 if constant else 0)
        magnitude = abs(dominant.coef)
        head = (magnitude, dominant.height, dominant.top)

        for other in others:
            rival = (2 * parts * abs(other.coef), other.height, other.top)
            if self.compare_pair(head, rival, depth + 1) is not Ordering.GT:
                logger.debug(f"Dominance undecided against exp_{other.height}({other.top})")
                return Ordering.UNKNOWN
        if constant and self.compare_pair(head, (2 * parts * constant, 0, 1), depth + 1) is not Ordering.GT:
            return Ordering.UNKNOWN
        return Ordering.GT if dominant.coef > 0 else Ordering.LT


def engine_for(precision: Optional[Fraction] = None) -> TowerSignEngine:
    """Engine whose refinement stops at the given precision ceiling."""
    return TowerSignEngine(schedule=bits_schedule(precision))


def tower_sum_sign(s: TowerSum, p: Optional[Rational] = None) -> Ordering:
    """Certified sign of a sum of tower terms, logarithms and a constant; UNKNOWN past the ceiling p."""
    return engine_for(Fraction(p) if p is not None else None).sign(s)


def mag_compare(a: TowerMag, b: TowerMag, p: Optional[Rational] = None) -> Ordering:
    """Compare the values 1/exp_da(ta) and 1/exp_db(tb).

    Args:
        a: First magnitude
        b: Second magnitude
        p: Precision ceiling for the certified residue comparison

    Returns:
        Ordering of a against b; UNKNOWN when enclosures overlap at precision p
    """
    if a == b:
        return Ordering.EQ
    engine = engine_for(Fraction(p) if p is not None else None)
    return engine.compare_towers(a.depth, a.top, b.depth, b.top).reversed()


def scaled_compare(scale: Rational, a: TowerMag, b: TowerMag, p: Optional[Rational] = None) -> Ordering:
    """Compare scale * value(a) with value(b), scale > 0."""
    engine = engine_for(Fraction(p) if p is not None else None)
    return engine.compare_pair((scale, b.depth, b.top), (1, a.depth, a.top))


def tower_scaled_lower(scale: Rational, t: TowerMag) -> Optional[TowerMag]:
    """A TowerMag not exceeding scale * value(t), or None."""
    scale = Fraction(scale)
    if scale <= 0:
        return None
    if t.depth == 0:
        return TowerMag(0, t.top / scale)
    if scale >= 1:
        return t
    shift = log_bounds(1 / scale, bits_schedule()[-1])[1]
    return TowerMag(t.depth, t.top + shift)


def tower_scaled_upper(scale: Rational, t: TowerMag) -> Optional[TowerMag]:
    """A TowerMag not below scale * value(t), or None when no positive top works."""
    scale = Fraction(scale)
    if t.depth == 0:
        return TowerMag(0, t.top / scale)
    if scale <= 1:
        return t
    shift = log_bounds(scale, bits_schedule()[-1])[1]
    if t.top - shift <= 0:
        return None
    return TowerMag(t.depth, t.top - shift)


def tower_power_bounds(t: TowerMag, l: int) -> Tuple[TowerMag, TowerMag]:
    """Lower and upper TowerMag bounds of value(t)**l for l >= 1."""
    if t.depth == 0:
        exact = TowerMag(0, t.top ** l)
        return exact, exact
    if t.depth == 1:
        exact = TowerMag(1, t.top * l)
        return exact, exact
    # l * exp_{d-1}(t) <= exp_{d-1}(t + ln l) for d >= 2
    shift = log_bounds(Fraction(l), bits_schedule()[-1])[1]
    return TowerMag(t.depth, t.top + shift), t


def sum_bounds(s: TowerSum, bits: int) -> Bounds:
    """Numeric bounds of a TowerSum; raises MagnitudeOverflowError past the exp ceiling."""
    return engine_for().enclose(s.normalized(), bits)

"""
Unit tests for covering numbers, including a brute-force oracle comparison.
"""
import itertools
import os
import sys
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from cantor.system import CantorSystem, GapRule
from exact_sets.covering import covering_number
from exact_sets.intervals import Interval, IntervalSet, SetOp, normalize, set_algebra

pytestmark = pytest.mark.unit


def _covered(components, anchors, r):
    """True when the cubes [a, a + r] cover every component."""
    cubes = sorted(anchors)
    for comp in components:
        point = comp.lo
        while True:
            reach = max((a + r for a in cubes if a <= point <= a + r), default=None)
            if reach is None:
                return False
            if reach >= comp.hi:
                break
            if reach <= point:
                return False
            point = reach
    return True


def brute_force_cover(a, r):
    """Smallest number of cubes among anchors lo_i + j r, searched exhaustively."""
    candidates = set()
    for comp in a:
        j = 0
        while comp.lo + j * r <= comp.hi:
            candidates.add(comp.lo + j * r)
            j += 1
    candidates = sorted(candidates)
    for size in range(1, len(candidates) + 1):
        for anchors in itertools.combinations(candidates, size):
            if _covered(a.components, anchors, r):
                return size
    return len(candidates)


interval_sets = st.lists(
    st.tuples(st.integers(0, 8), st.integers(0, 8)).map(lambda p: (min(p), max(p))),
    min_size=1, max_size=6,
).map(lambda pairs: normalize([Interval(F(lo), F(hi)) for lo, hi in pairs]))

radii = st.sampled_from([F(1), F(3, 2), F(2), F(5, 2), F(3), F(7, 3)])


class TestCoveringNumber:
    """Greedy covering numbers of interval sets."""

    def test_unit_interval(self):
        """[0,1] needs 1, 2 and 4 cubes at radii 1, 1/2, 1/4."""
        a = IntervalSet.single(F(0), F(1))
        assert [covering_number(a, r) for r in (F(1), F(1, 2), F(1, 4))] == [1, 2, 4]

    def test_empty_set_needs_none(self):
        """N(∅, r) = 0."""
        assert covering_number(IntervalSet(), F(1, 2)) == 0

    def test_radius_must_be_positive(self):
        """Non-positive radii are rejected."""
        with pytest.raises(ValueError):
            covering_number(IntervalSet.single(F(0), F(1)), F(0))

    def test_points(self):
        """Isolated points further apart than r need one cube each."""
        points = normalize([Interval(F(x), F(x)) for x in range(5)])
        assert covering_number(points, F(1, 2)) == 5
        assert covering_number(points, F(1)) == 3

    def test_rational_level_one_at_r1(self, rational_system):
        """E_K at r = r_1 needs two cubes."""
        level = rational_system.level_set(6)
        assert covering_number(level, rational_system.scale(1)) == 2

    def test_middle_thirds_level_six(self):
        """Level 6 of the middle-thirds set at r = 3^-6 needs 64 cubes."""
        level = CantorSystem(GapRule.MIDDLE_THIRDS, depth=6).level_set(6)
        assert covering_number(level, F(1, 3 ** 6)) == 64

    @settings(max_examples=200, deadline=None)
    @given(a=interval_sets, r=radii)
    def test_matches_brute_force(self, a, r):
        """Greedy equals the exhaustive minimum on small random sets."""
        assert covering_number(a, r) == brute_force_cover(a, r)

    @settings(max_examples=50, deadline=None)
    @given(a=interval_sets, r=radii)
    def test_monotone_in_radius(self, a, r):
        """Shrinking the radius never lowers the count."""
        assert covering_number(a, r) <= covering_number(a, r / 2)

    @settings(max_examples=100, deadline=None)
    @given(a=interval_sets, b=interval_sets, r=radii)
    def test_subadditive_over_unions(self, a, b, r):
        """N(A ∪ B) <= N(A) + N(B)."""
        union = set_algebra(SetOp.UNION, a, b)
        assert covering_number(union, r) <= covering_number(a, r) + covering_number(b, r)

    @settings(max_examples=100, deadline=None)
    @given(a=interval_sets, b=interval_sets, r=radii)
    def test_monotone_under_inclusion(self, a, b, r):
        """A ⊆ B gives N(A) <= N(B); checked on A ∩ B ⊆ A ⊆ A ∪ B."""
        inner = set_algebra(SetOp.INTERSECT, a, b)
        outer = set_algebra(SetOp.UNION, a, b)
        assert inner.is_subset_of(a) and a.is_subset_of(outer)
        assert covering_number(inner, r) <= covering_number(a, r) <= covering_number(outer, r)

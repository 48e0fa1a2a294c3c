"""
Unit tests for Cantor systems and gap-encoded sets.
"""
import os
import sys
from fractions import Fraction as F

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from cantor.gap_encoded import (
    factorial_gap_set, factorial_lengths, gap_encoded_set, literal_factorial_witness, separator_width
)
from cantor.system import Address, CantorSystem, GapRule, all_addresses
from errors import ConfigError, DepthExceededError, LengthsNotSummableError
from exact_sets.intervals import Interval
from exact_sets.scalars import scalar_compare, scalar_lt, to_fraction
from magnitudes.towers import Ordering

pytestmark = pytest.mark.unit


class TestGapRule:
    """Rule parsing."""

    def test_parse(self):
        """Enum values and underscores are accepted."""
        assert GapRule.parse("theorem_b") is GapRule.THEOREM_B
        assert GapRule.parse("middle-thirds") is GapRule.MIDDLE_THIRDS

    def test_unknown(self):
        """Unknown rules are configuration errors."""
        with pytest.raises(ConfigError):
            GapRule.parse("sierpinski")


class TestAddress:
    """Binary addresses."""

    def test_rejects_non_bits(self):
        """Only 0 and 1 are allowed."""
        with pytest.raises(ValueError):
            Address("012")

    def test_enumeration(self):
        """Addresses of length 2 in lexicographic order."""
        assert [str(a) for a in all_addresses(2)] == ["00", "01", "10", "11"]

    def test_prefix_and_child(self):
        """Navigation along the tree."""
        assert Address("0110").prefix(2) == Address("01")
        assert Address("01").child("1") == Address("011")


class TestTheoremB:
    """Level sets of the fast construction."""

    @pytest.mark.parametrize("regime", ["rational", "tower"])
    def test_census(self, regime):
        """E_k has 2^k components of length exactly r_k."""
        system = CantorSystem(GapRule.THEOREM_B, regime, depth=8)
        for k in range(9):
            level = system.level_set(k)
            assert len(level) == 2 ** k
            r_k = system.scale(k)
            assert all(scalar_compare(c.length, r_k) is Ordering.EQ for c in level)

    def test_first_level(self, rational_system):
        """E_1 = [0, 1/16] ∪ [15/16, 1]."""
        level = rational_system.level_set(1)
        assert [(to_fraction(c.lo), to_fraction(c.hi)) for c in level] == [
            (F(0), F(1, 16)), (F(15, 16), F(1))
        ]

    def test_levels_are_nested(self, rational_system):
        """E_{k+1} ⊆ E_k."""
        for k in range(5):
            assert rational_system.level_set(k + 1).is_subset_of(rational_system.level_set(k))

    def test_levels_are_cached(self, rational_system):
        """A built level is returned again, not rebuilt."""
        assert rational_system.level_set(4) is rational_system.level_set(4)

    def test_depth_exceeded(self, rational_system):
        """Levels beyond the configured depth are refused."""
        with pytest.raises(DepthExceededError) as excinfo:
            rational_system.level_set(9)
        assert excinfo.value.details == {"level": 9, "depth": 8}

    def test_negative_depth(self):
        """Depth must be non-negative."""
        with pytest.raises(ConfigError):
            CantorSystem(GapRule.THEOREM_B, "rational", depth=-1)

    def test_address_interval_matches_level_set(self, rational_system):
        """The address of the i-th component is i in binary."""
        level = rational_system.level_set(3)
        for index, addr in enumerate(all_addresses(3)):
            interval = rational_system.address_interval(addr)
            assert scalar_compare(interval.lo, level[index].lo) is Ordering.EQ
            assert scalar_compare(interval.hi, level[index].hi) is Ordering.EQ

    def test_address_point_is_in_deeper_levels(self, rational_system):
        """Left endpoints of address intervals are never removed."""
        point = rational_system.address_point("1011")
        assert rational_system.level_set(8).contains_point(point)

    def test_gaps_separate_blocks(self, tower_system):
        """Gaps between level-k blocks are longer than r_k."""
        level = tower_system.level_set(4)
        gaps = level.gaps()
        assert all(scalar_lt(tower_system.scale(4), g.length) for g in gaps)


class TestMiddleThirds:
    """Middle-thirds control construction."""

    def test_scales_are_rational(self, middle_thirds):
        """r_k = 3^-k exactly."""
        assert middle_thirds.scale(3) == F(1, 27)

    def test_level_two(self, middle_thirds):
        """Four components of length 1/9."""
        level = middle_thirds.level_set(2)
        assert [(c.lo, c.hi) for c in level] == [
            (F(0), F(1, 9)), (F(2, 9), F(1, 3)), (F(2, 3), F(7, 9)), (F(8, 9), F(1))
        ]

    def test_regime_is_geometric(self, middle_thirds):
        """Non-fast rules always use the geometric basis."""
        assert middle_thirds.regime.value == "geometric"


class TestGapEncoded:
    """Sets whose gaps carry prescribed lengths."""

    def test_gap_lengths_present(self):
        """Every encoded length is the length of some gap."""
        lengths = [F(1, 2), F(1, 6), F(1, 24)]
        encoded = gap_encoded_set(lengths, 2)
        gap_lengths = {g.length for g in encoded.gaps()}
        assert set(lengths) <= gap_lengths

    def test_separator_gaps_are_shorter(self):
        """Internal block gaps are below the smallest encoded length."""
        lengths = [F(1, 2), F(1, 6), F(1, 24)]
        encoded = gap_encoded_set(lengths, 3)
        others = [g.length for g in encoded.gaps() if g.length not in lengths]
        assert others and max(others) < min(lengths)

    def test_inside_unit_interval(self):
        """The set stays within [0, 1]."""
        encoded = gap_encoded_set([F(1, 3), F(1, 5)], 2)
        assert Interval(F(0), F(1)).contains_interval(encoded.hull())

    def test_separator_width(self):
        """Width is capped by 4/5 of the smallest length."""
        assert separator_width([F(1, 2), F(1, 6)]) == min((1 - F(2, 3)) / 3, F(4, 5) * F(1, 6))

    @pytest.mark.parametrize("lengths", [
        [F(1, 2), F(1, 2)],
        [F(1, 6), F(1, 2)],
        [F(3, 5), F(2, 5)],
        [F(-1, 2)],
    ])
    def test_invalid_lengths(self, lengths):
        """Lengths must be positive, strictly decreasing and sum below 1."""
        with pytest.raises(LengthsNotSummableError):
            gap_encoded_set(lengths, 1)

    def test_factorial_lengths(self):
        """1/2!, ..., 1/5!."""
        assert factorial_lengths(5) == [F(1, 2), F(1, 6), F(1, 24), F(1, 120)]

    def test_factorial_gap_set_system(self):
        """The gap-encoded rule builds through CantorSystem."""
        system = CantorSystem(GapRule.GAP_ENCODED, depth=2, lengths=factorial_lengths(4))
        assert system.level_set(2) == factorial_gap_set(4, 2)
        with pytest.raises(ConfigError):
            system.address_interval("01")

    def test_literal_removal_degenerates(self):
        """Central removal of 1/n! from every component runs out of room."""
        witness = literal_factorial_witness(6)
        assert witness["degenerates_at"] is not None
        assert witness["steps"][0] == {"n": 2, "removed": "1/2", "component_length": "1/4"}

"""
Unit tests for gap bases, fast sequences and their certified checks.
"""
import os
import sys
from fractions import Fraction as F

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from errors import ConfigError
from exact_sets.scalars import scalar_compare, scalar_lt, to_fraction
from magnitudes.sequences import (
    Regime, basis_by_name, basis_for, fast_sequence, fastness_check, rational_exponent, separation_check,
    tower_depth
)
from magnitudes.towers import Ordering, TowerMag

pytestmark = pytest.mark.unit


class TestRegime:
    """Regime parsing."""

    @pytest.mark.parametrize("token,expected", [
        ("rational", Regime.RATIONAL_FAST),
        ("RATIONAL_FAST", Regime.RATIONAL_FAST),
        ("tower-fast", Regime.TOWER_FAST),
        ("middle-thirds", Regime.GEOMETRIC),
    ])
    def test_aliases(self, token, expected):
        """Spellings accepted on the command line."""
        assert Regime.parse(token) is expected

    def test_unknown(self):
        """Anything else is a configuration error."""
        with pytest.raises(ConfigError):
            Regime.parse("polynomial")

    def test_basis_by_name(self):
        """Serialized combinations find their basis again."""
        assert basis_by_name("tower") is basis_for("tower")
        with pytest.raises(ConfigError):
            basis_by_name("nope")


class TestRationalRegime:
    """r_{k+1} = r_k^(k+2) with r_1 = 1/16."""

    def test_exponents(self):
        """a_k = (k+1)!/2."""
        assert [rational_exponent(k) for k in range(1, 8)] == [1, 3, 12, 60, 360, 2520, 20160]

    def test_first_terms(self):
        """r_0 = 1, r_1 = 1/16, r_2 = 1/16^3, r_3 = r_2^4."""
        values = [to_fraction(fast_sequence("rational", k)) for k in range(4)]
        assert values == [F(1), F(1, 16), F(1, 16 ** 3), F(1, 16 ** 12)]

    def test_recurrence(self):
        """r_{k+1} = r_k^(k+2) for k >= 1."""
        for k in range(1, 5):
            r_k = to_fraction(fast_sequence("rational", k))
            assert to_fraction(fast_sequence("rational", k + 1)) == r_k ** (k + 2)

    def test_memoized(self):
        """Repeated calls return the same object."""
        assert fast_sequence("rational", 5) is fast_sequence(Regime.RATIONAL_FAST, 5)

    def test_negative_index(self):
        """Indices start at 0."""
        with pytest.raises(ValueError):
            fast_sequence("rational", -1)

    def test_strictly_decreasing(self):
        """Every next scale is smaller."""
        for k in range(8):
            assert scalar_lt(fast_sequence("rational", k + 1), fast_sequence("rational", k))


class TestTowerRegime:
    """r_k = 1/exp_{d_k}(16)."""

    def test_depths(self):
        """d_k = k(k+1)/2 - 1."""
        assert [tower_depth(k) for k in range(1, 6)] == [0, 2, 5, 9, 14]

    def test_first_terms(self):
        """r_1 = 1/16 is rational, r_2 is a tower."""
        basis = basis_for("tower")
        assert basis.materialize_term(1) == F(1, 16)
        assert basis.materialize_term(2) is None
        assert basis.term_tower(2) == TowerMag(2, F(16))

    def test_r2_below_psi_of_r1(self):
        """r_2 <= ψ_1(r_1)."""
        basis = basis_for("tower")
        bound = basis.term_tower(1).psi(1)
        assert scalar_compare(fast_sequence("tower", 2), bound) in (Ordering.LT, Ordering.EQ)


class TestChecks:
    """Separation and fastness certificates."""

    @pytest.mark.parametrize("regime", ["rational", "tower"])
    def test_separation_by_sixteen(self, regime):
        """16 r_{k+1} <= r_k for every k."""
        report = separation_check(regime, 16, 8, strict=False)
        assert report.passed
        assert report.checked == 8

    def test_separation_fails_for_huge_factor(self):
        """17 r_1 > r_0 in the rational regime."""
        report = separation_check("rational", 17, 3)
        assert not report.passed
        assert report.first_failure["k"] == 0

    def test_tower_regime_is_fast(self):
        """r_{k+1} <= ψ_j(r_k) for k >= j in the tower regime."""
        for j in (1, 2, 3):
            report = fastness_check("tower", j, 8)
            assert report.passed, report.first_failure
            assert report.unknown == 0

    def test_rational_regime_is_not_psi_fast(self):
        """The rational regime fails against ψ_1 at the first index."""
        report = fastness_check("rational", 1, 6)
        assert not report.passed
        assert report.first_failure["k"] == 1
        assert report.first_failure["verdict"] == "fail"

    def test_identity_iterate(self):
        """ψ_0 is the identity, so every regime passes."""
        assert fastness_check("rational", 0, 6).passed

    def test_trace_is_serializable(self):
        """to_dict carries the per-index trace."""
        data = fastness_check("tower", 1, 4).to_dict()
        assert data["regime"] == "tower"
        assert {entry["check"] for entry in data["trace"]} == {"psi", "separation"}

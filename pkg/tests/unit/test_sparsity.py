"""
Unit tests for covering profiles, box-counting slopes, the null diagnostic and moduli.
"""
import os
import sys
from fractions import Fraction as F

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from cantor.system import CantorSystem, GapRule
from errors import DegenerateProfileError, ProfileMismatchError
from exact_sets.intervals import Interval, IntervalSet, normalize
from magnitudes.towers import TowerMag
from sparsity.diagnostics import log_tower, null_diagnostic
from sparsity.dimension import DIMENSION_LABEL, box_dim_estimate, log_reciprocal_bounds, plot_points
from sparsity.modulus import (
    IdentityModulus, PowerModulus, PsiModulus, ScaledModulus, check_monotone, modulus_pushforward, parse_modulus
)
from sparsity.profiles import (
    CoveringProfile, ProfileEntry, ProfileMethod, closed_form_for, covering_profile, product_cover_bound,
    regime_radii
)

pytestmark = pytest.mark.unit

LOG2_LOG3 = 0.6309297535714574


def middle_thirds_profile(lo=4, hi=12):
    system = CantorSystem(GapRule.MIDDLE_THIRDS, depth=hi)
    return covering_profile(system.level_set(hi), regime_radii(system, (lo, hi)), closed_form_for(system, hi))


class TestCoveringProfile:
    """Exact covering numbers over radius lists."""

    def test_unit_interval(self):
        """Radii are sorted decreasing and deduplicated."""
        profile = covering_profile(IntervalSet.single(F(0), F(1)), [F(1, 4), F(1), F(1, 2), F(1, 2)])
        assert profile.radii() == [F(1), F(1, 2), F(1, 4)]
        assert profile.counts() == [1, 2, 4]
        assert {e.method for e in profile} == {ProfileMethod.GREEDY_EXACT}

    def test_closed_form_agrees_with_greedy(self, rational_system):
        """N(E_8, r_k) = 2^k, checked by greedy."""
        profile = covering_profile(
            rational_system.level_set(8), regime_radii(rational_system, (0, 8)), closed_form_for(rational_system, 8)
        )
        assert profile.counts() == [2 ** k for k in range(9)]
        assert {e.method for e in profile} == {ProfileMethod.CLOSED_FORM}

    def test_tower_regime_closed_form(self, tower_system):
        """The closed form holds where the scales are towers."""
        profile = covering_profile(
            tower_system.level_set(6), regime_radii(tower_system, (1, 6)), closed_form_for(tower_system, 6)
        )
        assert profile.counts() == [2 ** k for k in range(1, 7)]

    def test_radius_between_scales(self, rational_system):
        """r in [r_{k+1}, r_k) gives 2^(k+1)."""
        closed_form = closed_form_for(rational_system, 8)
        assert closed_form(F(1, 32)) == 4
        assert closed_form(F(2)) == 1

    def test_no_closed_form_for_gap_encoded(self):
        """Gap-encoded sets are counted by greedy only."""
        system = CantorSystem(GapRule.GAP_ENCODED, depth=2, lengths=[F(1, 2), F(1, 6)])
        assert closed_form_for(system, 2) is None

    def test_mismatch_is_reported(self):
        """A wrong closed form fails loudly when verified."""
        with pytest.raises(ProfileMismatchError) as excinfo:
            covering_profile(IntervalSet.single(F(0), F(1)), [F(1, 2)], lambda r: 7)
        assert excinfo.value.details["greedy"] == 2

    def test_skip_verification(self):
        """verify=False trusts the closed form."""
        profile = covering_profile(IntervalSet.single(F(0), F(1)), [F(1, 2)], lambda r: 2, verify=False)
        assert profile.entries[0].method is ProfileMethod.CLOSED_FORM

    def test_parallel_matches_serial(self, middle_thirds):
        """Worker threads do not change the result."""
        level = middle_thirds.level_set(8)
        radii = regime_radii(middle_thirds, (2, 8))
        assert covering_profile(level, radii, workers=4) == covering_profile(level, radii, workers=1)

    def test_counts_never_decrease(self):
        """Profiles reject counts that drop as r shrinks."""
        with pytest.raises(ValueError):
            CoveringProfile((
                ProfileEntry(F(1, 2), 4, ProfileMethod.GREEDY_EXACT),
                ProfileEntry(F(1, 4), 2, ProfileMethod.GREEDY_EXACT),
            ))

    def test_regime_radii_window(self, middle_thirds):
        """Window lo:hi gives r_lo ... r_hi."""
        assert regime_radii(middle_thirds, (1, 3)) == [F(1, 3), F(1, 9), F(1, 27)]
        with pytest.raises(ValueError):
            regime_radii(middle_thirds, (3, 1))


class TestProductCover:
    """Covering numbers of finite product grids."""

    def test_product_bound_holds(self):
        """N(P x P, r) <= N(P, r)^2 on level-1 endpoints."""
        points = [F(0), F(1, 16), F(15, 16), F(1)]
        report = product_cover_bound(points, F(1, 16))
        assert report.axis_count == 2
        assert report.product_count == 4
        assert report.holds

    def test_too_many_points(self):
        """The exhaustive search is limited to 4 points per axis."""
        with pytest.raises(ValueError):
            product_cover_bound([F(i) for i in range(5)], F(1))


class TestBoxDimension:
    """Windowed box-counting slopes."""

    def test_middle_thirds(self):
        """Slope over 3^-4 .. 3^-12 is log 2 / log 3."""
        estimate = box_dim_estimate(middle_thirds_profile())
        assert abs(float(estimate.slope) - LOG2_LOG3) <= 0.02
        assert estimate.points == 9
        assert estimate.label == DIMENSION_LABEL

    def test_unit_interval(self):
        """[0,1] at dyadic radii has slope 1."""
        profile = covering_profile(IntervalSet.single(F(0), F(1)), [F(1, 2 ** j) for j in range(1, 8)])
        assert abs(float(box_dim_estimate(profile).slope) - 1) <= 0.01

    def test_constant_counts(self):
        """Five points below their minimum gap give slope 0."""
        points = normalize([Interval(F(x), F(x)) for x in range(5)])
        profile = covering_profile(points, [F(1, 2), F(1, 4), F(1, 8)])
        estimate = box_dim_estimate(profile)
        assert estimate.degenerate
        assert estimate.slope == 0
        with pytest.raises(DegenerateProfileError):
            box_dim_estimate(profile, strict=True)

    def test_too_few_radii(self):
        """At least three radii are needed."""
        profile = covering_profile(IntervalSet.single(F(0), F(1)), [F(1, 2), F(1, 4)])
        with pytest.raises(DegenerateProfileError):
            box_dim_estimate(profile)

    def test_rational_regime_slopes_shrink(self, rational_system):
        """Fast scales give small slopes that fall with window depth."""
        level = rational_system.level_set(8)
        closed_form = closed_form_for(rational_system, 8)
        slopes = []
        for window in ((1, 3), (2, 4), (3, 5)):
            profile = covering_profile(level, regime_radii(rational_system, window), closed_form)
            slopes.append(float(box_dim_estimate(profile).slope))
        assert all(s <= 0.15 for s in slopes)
        assert slopes == sorted(slopes, reverse=True)

    def test_plot_points(self):
        """One (log 1/r, log N) pair per entry."""
        points = plot_points(middle_thirds_profile(1, 3))
        assert len(points) == 3
        assert abs(float(points[0].log_inv_r) - 1.0986122886681098) < 1e-9
        assert abs(float(points[0].log_n) - 0.6931471805599453) < 1e-9

    def test_log_reciprocal_of_tower_scale(self, tower_system):
        """ln(1/r_2) = e^16 = 8886110.5205... in the tower regime."""
        lo, hi = log_reciprocal_bounds(tower_system.scale(2))
        assert lo <= F(88861105206, 10 ** 4)
        assert hi >= F(88861105205, 10 ** 4)
        assert hi - lo < 1


class TestNullDiagnostic:
    """Certified r_{k+1} exp_m(2^(k+1)) <= r_k / ψ_{m+1}(r_{k-1})."""

    def test_log_tower(self):
        """ln exp_m(x) is exp_{m-1}(x), or ln x for m = 0."""
        assert log_tower(0, 8).logs[0].arg == 8
        assert log_tower(2, 3).terms[0].height == 1

    @pytest.mark.parametrize("m", [0, 1, 2])
    def test_tower_regime_holds(self, tower_system, m):
        """The tower regime satisfies the bound with no undecided index."""
        report = null_diagnostic(tower_system, m, range(3, 8))
        assert report.passed, report.first_failure
        assert report.unknown == 0
        assert report.checked == 5

    def test_middle_thirds_fails(self, middle_thirds):
        """Geometric scales fail the bound at k = 1."""
        report = null_diagnostic(middle_thirds, 1, range(1, 4))
        assert not report.passed
        assert report.first_failure["k"] == 1
        assert report.first_failure["verdict"] == "fail"

    def test_trace_columns(self, tower_system):
        """Every entry carries the informational columns."""
        report = null_diagnostic(tower_system, 1, [3])
        assert set(report.trace[0]) >= {"k", "verdict", "product", "vanishing"}

    def test_default_range(self):
        """Without a range, k runs over 1 .. depth - 1."""
        system = CantorSystem(GapRule.THEOREM_B, "tower", depth=5)
        report = null_diagnostic(system, 0)
        assert [entry["k"] for entry in report.trace] == [1, 2, 3, 4]

    def test_invalid_arguments(self, tower_system):
        """m >= 0 and k >= 1."""
        with pytest.raises(ValueError):
            null_diagnostic(tower_system, -1)
        with pytest.raises(ValueError):
            null_diagnostic(tower_system, 1, [0, 1])


class TestModulus:
    """Moduli of continuity and pushed-forward profiles."""

    def test_power_pushforward(self):
        """(1/4, 8) under r^2 is the bound (1/16, 8)."""
        profile = CoveringProfile((ProfileEntry(F(1, 4), 8, ProfileMethod.GREEDY_EXACT),))
        pushed = modulus_pushforward(profile, PowerModulus(2))
        assert pushed.entries == (ProfileEntry(F(1, 16), 8, ProfileMethod.BOUND),)

    def test_identity(self):
        """The identity keeps radii and counts but marks them BOUND."""
        profile = middle_thirds_profile(2, 5)
        pushed = modulus_pushforward(profile, IdentityModulus())
        assert pushed.radii() == profile.radii()
        assert pushed.counts() == profile.counts()
        assert {e.method for e in pushed} == {ProfileMethod.BOUND}

    def test_power_halves_the_slope(self):
        """Squaring the radii halves the middle-thirds slope."""
        pushed = modulus_pushforward(middle_thirds_profile(), PowerModulus(2))
        assert abs(float(box_dim_estimate(pushed).slope) - LOG2_LOG3 / 2) <= 0.01

    def test_psi_on_tower_scales(self, tower_system):
        """ψ_1 of r_2 is one level deeper."""
        assert PsiModulus(1).upper(tower_system.scale(2)) == TowerMag(3, F(16))

    def test_scaled(self):
        """c r for rationals."""
        assert ScaledModulus(F(1, 2)).upper(F(1, 3)) == F(1, 6)

    @pytest.mark.parametrize("token,expected", [
        ("identity", "identity"),
        ("power:3", "power:3"),
        ("scaled:1/2", "scaled:1/2"),
        ("psi:1", "psi:1"),
    ])
    def test_parse(self, token, expected):
        """Command-line modulus tokens."""
        assert str(parse_modulus(token)) == expected

    def test_parse_unknown(self):
        """Unknown moduli are argument errors."""
        with pytest.raises(ValueError):
            parse_modulus("holder:2")

    def test_monotone(self):
        """r^2 is increasing on positive samples."""
        assert check_monotone(PowerModulus(2), [F(1, 2), F(1, 3), F(1, 4)])

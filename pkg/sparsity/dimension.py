"""
Dimension module for Sparse Forge.
Windowed box-counting slopes and (log 1/r, log N) plot data from covering profiles.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Tuple

import numpy as np

from errors import DegenerateProfileError, IncomparableError
from exact_sets.scalars import GapCombo, Scalar, scalar_sign, to_fraction
from magnitudes.enclosures import Bounds, log_bounds, log_interval
from magnitudes.towers import Ordering, TowerMag, sum_bounds
from sparsity.profiles import CoveringProfile

logger = logging.getLogger(__name__)

# Working precision of the log enclosures feeding the regression.
LOG_BITS = 64
# Reported slopes are rationals with denominators up to this bound.
SLOPE_DENOMINATOR = 10 ** 6

DIMENSION_LABEL = "box-counting slope over a finite window (upper bound for Hausdorff dimension)"


def log_reciprocal_bounds(r: Scalar, bits: int = LOG_BITS) -> Bounds:
    """Certified bounds of ln(1/r) for r > 0, without materializing huge scales.

    Raises:
        MagnitudeOverflowError: ln(1/r) itself exceeds the exp ceiling
    """
    if scalar_sign(r) is not Ordering.GT:
        raise ValueError(f"radius must be positive, got {r}")
    if isinstance(r, TowerMag):
        return sum_bounds(r.log_reciprocal(), bits)
    if isinstance(r, GapCombo):
        nonzero = [(j, c) for j, c in enumerate(r.coeffs) if c]
        if len(nonzero) == 1 and nonzero[0][1] == 1:
            return sum_bounds(r.basis.log_reciprocal(nonzero[0][0]), bits)
        exact = to_fraction(r)
        if exact is None:
            lo, hi = r.bounds(bits)
            if lo <= 0:
                raise IncomparableError(f"cannot bound {r} away from zero at {bits} bits")
            return log_interval(1 / hi, 1 / lo, bits)
        r = exact
    return log_bounds(1 / Fraction(r), bits)


@dataclass(frozen=True)
class PlotPoint:
    log_inv_r: Fraction
    log_n: Fraction

    def to_row(self) -> Dict[str, str]:
        return {"log_inv_r": f"{float(self.log_inv_r):.12g}", "log_N": f"{float(self.log_n):.12g}"}


def plot_points(profile: CoveringProfile) -> List[PlotPoint]:
    """(log 1/r, log N) pairs, each coordinate the midpoint of its certified enclosure."""
    points = []
    for entry in profile:
        r_lo, r_hi = log_reciprocal_bounds(entry.r)
        n_lo, n_hi = log_bounds(entry.n, LOG_BITS)
        points.append(PlotPoint((r_lo + r_hi) / 2, (n_lo + n_hi) / 2))
    return points


@dataclass
class DimensionEstimate:
    """Least-squares slope of log N against log 1/r."""
    slope: Fraction
    points: int
    window: Tuple[str, str]
    degenerate: bool = False
    label: str = DIMENSION_LABEL

    def to_dict(self) -> Dict[str, Any]:
        return {
            "slope": str(self.slope),
            "slope_decimal": f"{float(self.slope):.6f}",
            "points": self.points,
            "window": list(self.window),
            "degenerate": self.degenerate,
            "label": self.label,
        }


def box_dim_estimate(profile: CoveringProfile, strict: bool = False) -> DimensionEstimate:
    """Windowed box-counting slope of a covering profile.

    The regression runs on certified log enclosures and the slope is rounded
    to a rational with denominator at most SLOPE_DENOMINATOR.

    Args:
        profile: At least three entries
        strict: Raise instead of returning slope 0 when every count is equal

    Returns:
        DimensionEstimate

    Raises:
        DegenerateProfileError: Fewer than three entries, or constant counts with strict=True
    """
    if len(profile) < 3:
        raise DegenerateProfileError(f"box dimension needs at least 3 radii, got {len(profile)}")
    window = (str(profile.entries[0].r), str(profile.entries[-1].r))
    counts = profile.counts()
    if len(set(counts)) == 1:
        if strict:
            raise DegenerateProfileError(f"every covering count equals {counts[0]}", details={"N": counts[0]})
        logger.info(f"Constant covering count {counts[0]}; slope is 0")
        return DimensionEstimate(Fraction(0), len(profile), window, degenerate=True)

    points = plot_points(profile)
    x = np.array([float(p.log_inv_r) for p in points])
    y = np.array([float(p.log_n) for p in points])
    slope, _ = np.polyfit(x, y, 1)
    estimate = Fraction(float(slope)).limit_denominator(SLOPE_DENOMINATOR)
    logger.info(f"Box-counting slope over {len(points)} radii: {float(estimate):.6f}")
    return DimensionEstimate(estimate, len(points), window)

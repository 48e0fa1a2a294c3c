"""
Diagnostics module for Sparse Forge.
The nullity diagnostic: r_{k+1} exp_m(2^(k+1)) against r_k / ψ_{m+1}(r_{k-1}) in the tower domain.
"""
import logging
from fractions import Fraction
from typing import Optional, Sequence

from cantor.system import CantorSystem
from errors import SparseForgeError
from magnitudes.sequences import CheckReport
from magnitudes.towers import LogAtom, Ordering, TowerSignEngine, TowerSum, TowerTerm, engine_for

logger = logging.getLogger(__name__)

_ACCEPT = (Ordering.GT, Ordering.EQ)


def log_tower(m: int, x: int) -> TowerSum:
    """ln exp_m(x): exp_{m-1}(x) for m >= 1, ln x for m = 0."""
    if m == 0:
        return TowerSum(logs=(LogAtom(Fraction(1), Fraction(x)),))
    return TowerSum(terms=(TowerTerm(Fraction(1), m - 1, Fraction(x)),))


def _verdict(engine: TowerSignEngine, margin: TowerSum, strict: bool = False) -> str:
    outcome = engine.sign(margin)
    if outcome is Ordering.UNKNOWN:
        return "unknown"
    if outcome is Ordering.GT or (outcome is Ordering.EQ and not strict):
        return "holds"
    return "fails"


def null_diagnostic(
    system: CantorSystem,
    m: int,
    k_range: Optional[Sequence[int]] = None,
    precision: Optional[Fraction] = None
) -> CheckReport:
    """Certify r_{k+1} exp_m(2^(k+1)) <= r_k / ψ_{m+1}(r_{k-1}) for each k.

    Everything is compared through logarithms of reciprocals, so no scale is
    ever materialized. Two informational columns ride along in the trace:
    "product" is r_{k+1} exp_m(2^(k+1)) <= 1 and "vanishing" is
    r_k < ψ_{m+1}(r_{k-1}). Only the bound decides the verdict.

    Args:
        system: Cantor system supplying r_k
        m: Exponential height, m >= 0
        k_range: Indices k >= 1 (default 1 .. depth - 1)
        precision: Precision ceiling of the certified comparisons

    Returns:
        CheckReport; an index whose comparison overflowed or stayed undecided is "unknown"
    """
    if m < 0:
        raise ValueError(f"exponential height must be non-negative, got {m}")
    ks = list(k_range) if k_range is not None else list(range(1, system.depth))
    if any(k < 1 for k in ks):
        raise ValueError("null diagnostic needs k >= 1 so that r_{k-1} exists")

    basis = system.basis
    engine = engine_for(precision)
    report = CheckReport(basis.name, f"null:m={m}", min(ks, default=1), max(ks, default=0))

    for k in ks:
        try:
            inv_next = basis.log_reciprocal(k + 1)
            inv_here = basis.log_reciprocal(k)
            inv_psi = basis.psi_log_reciprocal(k - 1, m + 1)
            growth = log_tower(m, 2 ** (k + 1))
            bound = inv_next + (-inv_here) + (-growth) + inv_psi
            verdict = engine.sign(bound)
            columns = {
                "product": _verdict(engine, inv_next + (-growth)),
                "vanishing": _verdict(engine, inv_here + (-inv_psi), strict=True),
            }
        except SparseForgeError as e:
            logger.warning(f"null diagnostic at k={k}: {e.code}: {e.message}")
            report.record(k, Ordering.UNKNOWN, _ACCEPT, error=e.code)
            continue
        report.record(k, verdict, _ACCEPT, **columns)
        logger.debug(f"null diagnostic m={m} k={k}: {verdict.value} {columns}")

    logger.info(
        f"null diagnostic {system.rule.value}/{basis.name} m={m}: "
        f"{'pass' if report.passed else 'fail'} ({report.checked} checked, {report.unknown} unknown)"
    )
    return report

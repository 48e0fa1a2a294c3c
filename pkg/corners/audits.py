"""
Audits module for Sparse Forge.
Finite-level checks of the scale lemma and of corner containment for difference vectors of a Cantor system.
"""
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cantor.system import Address, CantorSystem, GapRule
from config import config
from errors import ConfigError, SparseForgeError, UnsupportedDimensionError
from corners.cells import (
    CornerKind, CornerSpec, Membership, _below, _order, chain_bounds, corner_box_membership, corner_membership
)
from exact_sets.scalars import Scalar, cheap_fraction, scalar_compare, scalar_le, scalar_lt, sorted_scalars
from exact_sets.serialization import scalar_to_json
from magnitudes.towers import Ordering, TowerMag, tower_scaled_lower

logger = logging.getLogger(__name__)

MAX_WITNESSES = 20
MAX_AUDIT_DIMENSION = 3

Witness = Dict[str, Any]


def _witness_key(witness: Witness) -> str:
    return json.dumps(witness, sort_keys=True)


def _merge_witnesses(*groups: Sequence[Witness]) -> List[Witness]:
    unique = {_witness_key(w): w for group in groups for w in group}
    return [unique[key] for key in sorted(unique)][:MAX_WITNESSES]


def _first_false(count: int, predicate: Callable[[int], bool], lo: int = 0) -> int:
    """First index in [lo, count) where a true-then-false predicate turns false."""
    hi = count
    while lo < hi:
        mid = (lo + hi) // 2
        if predicate(mid):
            lo = mid + 1
        else:
            hi = mid
    return lo


def endpoint_differences(system: CantorSystem, depth: int, bound: Scalar) -> Dict[Scalar, Tuple[Scalar, Scalar]]:
    """Distinct positive differences y - x <= bound of level-`depth` endpoints, each with its first witness pair.

    Differences of gap-basis endpoints have coefficients in {-2, ..., 2}; under
    the basis separation guard equal values are structurally equal.
    """
    points = system.endpoints(depth)
    found: Dict[Scalar, Tuple[Scalar, Scalar]] = {}
    for i, x in enumerate(points):
        for y in points[i + 1:]:
            d = y - x
            if not scalar_le(d, bound):
                break
            if d not in found:
                found[d] = (x, y)
    return found


# scale lemma


@dataclass
class ScaleLemmaReport:
    rule: str
    regime: str
    depth: int
    k: int
    reading: str
    checked: int = 0
    counterexamples: int = 0
    literal_box_counterexamples: int = 0
    witnesses: List[Witness] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.counterexamples == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": "scale-lemma", "rule": self.rule, "regime": self.regime, "depth": self.depth,
            "k": self.k, "reading": self.reading, "checked": self.checked,
            "counterexamples": self.counterexamples,
            "literal_box_counterexamples": self.literal_box_counterexamples,
            "witnesses": self.witnesses[:MAX_WITNESSES], "passed": self.passed,
        }


def _difference_witness(d1: Scalar, d2: Scalar, pair: Tuple[Scalar, Scalar]) -> Witness:
    return {"d1": scalar_to_json(d1), "d2": scalar_to_json(d2), "d1_from": [scalar_to_json(p) for p in pair]}


def _scale_lemma_differences(system: CantorSystem, depth: int, k: int, report: ScaleLemmaReport) -> None:
    r_k, r_next = system.scale(k), system.scale(k + 1)
    found = endpoint_differences(system, depth, r_k)
    diffs = sorted_scalars(found)
    report.checked = len(diffs)
    if not diffs:
        return
    smallest = diffs[0]
    band_start = _first_false(len(diffs), lambda i: scalar_le(diffs[i], r_next))
    wide_start = _first_false(len(diffs), lambda i: scalar_lt(diffs[i], r_k - 2 * r_next), band_start)
    literal_start = _first_false(len(diffs), lambda i: scalar_lt(diffs[i], r_k - r_next), wide_start)
    partner = diffs[band_start] if band_start < len(diffs) else None

    for i in range(band_start, len(diffs)):
        d1 = diffs[i]
        d2 = smallest if i < wide_start else partner
        if d2 is not None and scalar_lt(2 * d2, d1):
            report.counterexamples += 1
            if len(report.witnesses) < MAX_WITNESSES:
                report.witnesses.append(_difference_witness(d1, d2, found[d1]))
        if wide_start <= i < literal_start and scalar_lt(2 * smallest, d1):
            report.literal_box_counterexamples += 1


def _scale_lemma_points(system: CantorSystem, depth: int, k: int, report: ScaleLemmaReport) -> None:
    r_k, r_next = system.scale(k), system.scale(k + 1)
    zero = system.zero
    points = [p for p in system.endpoints(depth) if scalar_le(p, r_k)]
    for x in points:
        for y in points:
            if not (scalar_lt(zero, y) and scalar_lt(2 * y, x)):
                continue
            report.checked += 1
            inside = scalar_le(y, r_next) and (scalar_le(x, r_next) or scalar_le(r_k - r_next, x))
            if not inside:
                report.counterexamples += 1
                if len(report.witnesses) < MAX_WITNESSES:
                    report.witnesses.append({"x": scalar_to_json(x), "y": scalar_to_json(y)})
    report.literal_box_counterexamples = report.counterexamples


def scale_lemma_check(system: CantorSystem, depth: int, k: int, reading: str = "differences") -> ScaleLemmaReport:
    """Check E^2 ∩ [0, r_k]^2 ∩ S_2 against [0, r_{k+1}]^2 ∪ [r_k - r_{k+1}, r_k] x [0, r_{k+1}] at level `depth`.

    The "differences" reading runs over pairs (d1, d2) of endpoint
    differences. Differences across the two halves of a level-k block reach
    down to r_k - 2 r_{k+1}, so the right box starts there; counterexamples
    to the box as written are counted separately. The "points" reading runs
    over endpoint pairs with the box as written.

    Args:
        system: Cantor system
        depth: Level K of the endpoints
        k: Scale index, k < K
        reading: "differences" or "points"

    Returns:
        ScaleLemmaReport with exact witnesses
    """
    if not 0 <= k < depth:
        raise ConfigError(f"scale lemma needs 0 <= k < depth, got k={k}, depth={depth}")
    if system.rule is GapRule.GAP_ENCODED:
        raise ConfigError("the scale lemma is stated for level-set recursions, not gap-encoded sets")
    report = ScaleLemmaReport(system.rule.value, system.regime.value, depth, k, reading)
    if reading == "differences":
        _scale_lemma_differences(system, depth, k, report)
    elif reading == "points":
        _scale_lemma_points(system, depth, k, report)
    else:
        raise ConfigError(f"unknown scale lemma reading {reading!r}")
    logger.info(
        f"scale lemma {system.rule.value} K={depth} k={k} ({reading}): "
        f"{report.counterexamples} counterexamples among {report.checked}"
    )
    return report


# containment


@dataclass
class AuditReport:
    """Counts of difference vectors meeting the premise, by verdict; merges associatively."""
    verified: int = 0
    violated: int = 0
    unknown: int = 0
    skipped: int = 0
    witnesses: List[Witness] = field(default_factory=list)
    mode: str = ""
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violated == 0

    def merge(self, other: 'AuditReport') -> 'AuditReport':
        return AuditReport(
            self.verified + other.verified,
            self.violated + other.violated,
            self.unknown + other.unknown,
            self.skipped + other.skipped,
            _merge_witnesses(self.witnesses, other.witnesses),
            self.mode or other.mode,
            {**other.metadata, **self.metadata},
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verified": self.verified, "violated": self.violated, "unknown": self.unknown,
            "skipped": self.skipped, "witnesses": _merge_witnesses(self.witnesses),
            "mode": self.mode, "passed": self.passed, **self.metadata,
        }


def _materialized(values: List[Scalar]) -> List[Scalar]:
    cheap = [cheap_fraction(v) for v in values]
    return cheap if all(c is not None for c in cheap) else values


def _exhaustive_pairs(diffs: List[Scalar], sources: List[Tuple[Scalar, Scalar]], spec: CornerSpec,
                      p: Optional[Fraction]) -> AuditReport:
    report = AuditReport(mode="exhaustive")
    for a, d1 in enumerate(diffs):
        premise = _first_false(a, lambda i: scalar_lt(2 * diffs[i], d1))
        if not premise:
            continue
        holds = _first_false(premise, lambda i: _below(diffs[i], d1, spec, p) is Ordering.LT)
        fails = _first_false(premise, lambda i: _below(diffs[i], d1, spec, p) is not Ordering.GT, holds)
        report.verified += holds
        report.unknown += fails - holds
        report.violated += premise - fails
        if premise > fails and len(report.witnesses) < MAX_WITNESSES:
            report.witnesses.append({
                "difference": [scalar_to_json(d1), scalar_to_json(diffs[fails])],
                "points": [[scalar_to_json(x) for x in sources[a]], [scalar_to_json(x) for x in sources[fails]]],
            })
    return report


def _exhaustive_triples(diffs: List[Scalar], sources: List[Tuple[Scalar, Scalar]], spec: CornerSpec,
                        p: Optional[Fraction]) -> AuditReport:
    report = AuditReport(mode="exhaustive")
    halves = [_first_false(a, lambda i, d=d: scalar_lt(2 * diffs[i], d)) for a, d in enumerate(diffs)]
    for a, d1 in enumerate(diffs):
        for b in range(halves[a]):
            for c in range(halves[b]):
                verdict = corner_membership((d1, diffs[b], diffs[c]), spec, p)
                if verdict is Membership.IN:
                    report.verified += 1
                elif verdict is Membership.UNKNOWN:
                    report.unknown += 1
                else:
                    report.violated += 1
                    if len(report.witnesses) < MAX_WITNESSES:
                        report.witnesses.append({
                            "difference": [scalar_to_json(diffs[i]) for i in (a, b, c)],
                            "points": [[scalar_to_json(x) for x in sources[i]] for i in (a, b, c)],
                        })
    return report


def _triple_count(diffs: List[Scalar]) -> int:
    halves = [_first_false(a, lambda i, d=d: scalar_lt(2 * diffs[i], d)) for a, d in enumerate(diffs)]
    prefix = [0]
    for h in halves:
        prefix.append(prefix[-1] + h)
    return sum(prefix[h] for h in halves)


class _Sampler:
    """Random address pairs whose first differing bit sits at increasing levels, one per coordinate."""

    def __init__(self, system: CantorSystem, depth: int, spec: CornerSpec, delta: Scalar,
                 p: Optional[Fraction], refine: int):
        self.system = system
        self.depth = depth
        self.spec = spec
        self.delta = delta
        self.p = p
        self.refine = max(0, min(refine, system.depth - depth))
        self.premise = CornerSpec(CornerKind.SBB, spec.n)

    def _bits(self, rng: np.random.Generator, count: int) -> str:
        return "".join("1" if b else "0" for b in rng.integers(0, 2, size=count))

    def draw(self, rng: np.random.Generator) -> List[Tuple[Address, Address]]:
        levels = sorted(int(j) for j in rng.choice(self.depth, size=self.spec.n, replace=False))
        pairs = []
        for j in levels:
            prefix = self._bits(rng, j)
            x = Address(prefix + "1" + self._bits(rng, self.depth - j - 1))
            y = Address(prefix + "0" + self._bits(rng, self.depth - j - 1))
            pairs.append((x, y))
        return pairs

    def _box(self, pairs: Sequence[Tuple[Address, Address]]) -> List[Tuple[Scalar, Scalar]]:
        box = []
        for x, y in pairs:
            xi, yi = self.system.address_interval(x), self.system.address_interval(y)
            box.append((xi.lo - yi.hi, xi.hi - yi.lo))
        return box

    def _premise(self, box: List[Tuple[Scalar, Scalar]]) -> Membership:
        if any(_order(hi, self.delta, self.p) is not Ordering.LT for _, hi in box):
            if any(_order(lo, self.delta, self.p) in (Ordering.GT, Ordering.EQ) for lo, _ in box):
                return Membership.OUT
            return Membership.UNKNOWN
        return corner_box_membership(box, self.premise, self.p)

    def classify(self, pairs: Sequence[Tuple[Address, Address]], budget: int) -> str:
        """One of verified, violated, unknown, skipped for the pair of address tuples."""
        box = self._box(pairs)
        premise = self._premise(box)
        if premise is Membership.OUT:
            return "skipped"
        verdict = corner_box_membership(box, self.spec, self.p) if premise is Membership.IN else Membership.UNKNOWN
        if premise is Membership.IN and verdict is Membership.IN:
            return "verified"
        if premise is Membership.IN and verdict is Membership.OUT:
            return "violated"
        if budget <= 0:
            return "unknown"
        return self._split(pairs, budget - 1)

    def _split(self, pairs: Sequence[Tuple[Address, Address]], budget: int) -> str:
        children: List[List[Tuple[Address, Address]]] = [[]]
        for x, y in pairs:
            options = [(x.child(a), y.child(b)) for a in "01" for b in "01"]
            children = [prefix + [option] for prefix in children for option in options]
        outcomes = {self.classify(child, budget) for child in children}
        if "violated" in outcomes:
            return "violated"
        if "unknown" in outcomes:
            return "unknown"
        return "verified" if "verified" in outcomes else "skipped"


def _sample_audit(system: CantorSystem, depth: int, spec: CornerSpec, delta: Scalar, samples: int,
                  seed: int, refine: int, p: Optional[Fraction]) -> AuditReport:
    if system.rule is GapRule.GAP_ENCODED:
        raise ConfigError("box sampling needs addressable level sets; use exhaustive mode for gap-encoded sets")
    if spec.n > depth:
        raise ConfigError(f"sampling {spec.n} coordinates needs depth >= {spec.n}, got {depth}")
    sampler = _Sampler(system, depth, spec, delta, p, refine)
    rng = np.random.default_rng(seed)
    report = AuditReport(mode="sampling")
    for _ in range(samples):
        pairs = sampler.draw(rng)
        outcome = sampler.classify(pairs, sampler.refine)
        setattr(report, outcome, getattr(report, outcome) + 1)
        if outcome == "violated" and len(report.witnesses) < MAX_WITNESSES:
            report.witnesses.append({"addresses": [[str(x), str(y)] for x, y in pairs]})
    return report


def containment_audit(
    system: CantorSystem,
    depth: int,
    n: int,
    spec: CornerSpec,
    delta: Scalar,
    mode: Optional[str] = None,
    samples: int = 2000,
    seed: Optional[int] = None,
    max_pairs: Optional[int] = None,
    refine: Optional[int] = None,
    precision: Optional[Fraction] = None
) -> AuditReport:
    """Check that difference vectors of level-`depth` points in (0, δ)^n ∩ S_n lie in the corner cell.

    Exhaustive mode enumerates distinct endpoint differences: for n = 2 each
    d1 bisects the sorted differences for the premise d2 < d1/2 and for the
    corner link; n = 3 loops within the pair budget and falls back to
    sampling beyond it. Sampling mode draws address pairs, works with the
    whole difference box of their level-K intervals and splits undecided
    boxes up to `refine` levels deeper.

    Args:
        system: Cantor system
        depth: Level K
        n: Dimension, 1 <= n <= 3
        spec: POLY or PSI corner of dimension n
        delta: Premise bound δ > 0
        mode: "exhaustive" or "sampling" (default: exhaustive for n <= 2)
        samples: Number of sampled pairs
        seed: Sampler seed (default: configured)
        max_pairs: Exhaustive budget for n = 3 (default: configured)
        refine: Extra levels for undecided boxes (default: configured)
        precision: Precision ceiling for ψ comparisons

    Returns:
        AuditReport
    """
    if not 1 <= n <= MAX_AUDIT_DIMENSION:
        raise UnsupportedDimensionError(f"containment audits support 1 <= n <= {MAX_AUDIT_DIMENSION}, got {n}")
    if spec.kind is CornerKind.SBB:
        raise ConfigError("the audited corner must be poly:<l> or psi:<l>")
    if spec.n != n:
        raise ConfigError(f"corner {spec} does not match n={n}")
    if scalar_compare(delta, Fraction(0)) is not Ordering.GT:
        raise ConfigError(f"delta must be positive, got {delta}")
    mode = mode or ("exhaustive" if n <= 2 else "sampling")
    seed = config.SEED if seed is None else seed
    max_pairs = config.MAX_PAIRS if max_pairs is None else max_pairs
    refine = config.MAX_REFINE if refine is None else refine
    metadata = {"rule": system.rule.value, "regime": system.regime.value, "depth": depth, "n": n,
                "corner": str(spec), "delta": scalar_to_json(delta)}

    if mode == "exhaustive":
        found = endpoint_differences(system, depth, delta)
        keys = [d for d in sorted_scalars(found) if scalar_lt(d, delta)]
        sources = [found[d] for d in keys]
        diffs = _materialized(keys)
        if n == 1:
            report = AuditReport(verified=len(diffs), mode="exhaustive")
        elif n == 2:
            report = _exhaustive_pairs(diffs, sources, spec, precision)
        elif (triples := _triple_count(diffs)) <= max_pairs:
            report = _exhaustive_triples(diffs, sources, spec, precision)
        else:
            logger.warning(f"{triples} triples exceed the budget {max_pairs}; sampling instead")
            report = _sample_audit(system, depth, spec, delta, samples, seed, refine, precision)
    elif mode == "sampling":
        report = _sample_audit(system, depth, spec, delta, samples, seed, refine, precision)
        metadata.update({"samples": samples, "seed": seed, "refine": refine})
    else:
        raise ConfigError(f"unknown audit mode {mode!r}")

    report.metadata.update(metadata)
    logger.info(
        f"containment {spec} {system.rule.value} K={depth} ({report.mode}): verified={report.verified} "
        f"violated={report.violated} unknown={report.unknown}"
    )
    return report


# δ search


@dataclass(frozen=True)
class DeltaChoice:
    delta: Scalar
    index: int
    source: str

    def to_dict(self) -> Dict[str, Any]:
        return {"delta": scalar_to_json(self.delta), "index": self.index, "source": self.source}


def _delta_conditions(system: CantorSystem, spec: CornerSpec, k: int) -> bool:
    """r_{k+1} < f(f(r_k)) and f(r_k) < (1 - 1/ρ) r_k <= r_k - r_{k+1}, both certified."""
    try:
        r_k, r_next = system.scale(k), system.scale(k + 1)
        inner = chain_bounds(spec, r_k)
        if inner is None:
            return False
        outer = chain_bounds(spec, inner[0])
        if outer is None or _order(r_next, outer[0], None) is not Ordering.LT:
            return False
        rho = system.basis.ratio_lower_bound(k + 1)
        share = (rho - 1) / rho
        margin = tower_scaled_lower(share, system.basis.term_tower(k))
        room: Scalar = margin if isinstance(margin, TowerMag) else r_k * share
        return _order(inner[1], room, None) is Ordering.LT
    except SparseForgeError as e:
        logger.debug(f"delta condition at k={k} undecided: {e.code}")
        return False


def default_delta(system: CantorSystem, spec: CornerSpec, k_max: Optional[int] = None) -> DeltaChoice:
    """δ = r_N for the smallest N >= 1 with both conditions certified for every k in [N, k_max).

    Falls back to r_1 when no such N exists below k_max.
    """
    k_max = system.depth if k_max is None else k_max
    flags = [_delta_conditions(system, spec, k) for k in range(1, k_max)]
    for start in range(1, k_max):
        if all(flags[start - 1:]):
            choice = DeltaChoice(system.scale(start), start, "certified")
            break
    else:
        choice = DeltaChoice(system.scale(1), 1, "fallback")
    logger.info(f"default delta for {spec}: r_{choice.index} ({choice.source})")
    return choice

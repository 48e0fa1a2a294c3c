"""
Packing module for Sparse Forge.
The packing map T(x) = Σ 2^(i-1) x_i over 5-tuples with a collision-checked registry.
"""
import logging
import threading
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cantor.system import Address, CantorSystem
from errors import CollisionError, ConfigError, NotFoundError
from exact_sets.intervals import Interval, normalize
from exact_sets.scalars import Scalar, cheap_fraction, scalar_compare, scalar_key
from exact_sets.serialization import interval_set_to_json, scalar_to_json
from magnitudes.towers import Ordering, TowerMag

logger = logging.getLogger(__name__)

PACK_ARITY = 5
PACK_WEIGHT = sum(1 << i for i in range(PACK_ARITY))

Origin = Tuple[Scalar, ...]


def _same_origin(a: Origin, b: Origin) -> bool:
    return all(scalar_compare(x, y) is Ordering.EQ for x, y in zip(a, b))


class PackRegistry:
    """Packed values kept sorted by value, each with the tuple it came from.

    Lookup and insertion hold one lock, so collision detection is linearizable.
    """

    def __init__(self) -> None:
        self._keys: List[Any] = []
        self._values: List[Scalar] = []
        self._origins: List[Origin] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._keys)

    def _locate(self, t: Scalar) -> Tuple[int, bool]:
        key = scalar_key(t)
        index = bisect_left(self._keys, key)
        return index, index < len(self._keys) and self._keys[index] == key

    def insert(self, t: Scalar, origin: Sequence[Scalar]) -> None:
        """Record t = T(origin); re-inserting the same origin is a no-op.

        Raises:
            CollisionError: t is already the image of a different tuple
        """
        origin = tuple(origin)
        with self._lock:
            index, found = self._locate(t)
            if found:
                if _same_origin(self._origins[index], origin):
                    return
                raise CollisionError(
                    f"packed value {t} is the image of two different tuples",
                    details={
                        "packed": scalar_to_json(t),
                        "existing": [scalar_to_json(x) for x in self._origins[index]],
                        "incoming": [scalar_to_json(x) for x in origin],
                    }
                )
            self._keys.insert(index, scalar_key(t))
            self._values.insert(index, t)
            self._origins.insert(index, origin)

    def lookup(self, t: Scalar) -> Origin:
        with self._lock:
            index, found = self._locate(t)
            if not found:
                raise NotFoundError(f"packed value {t} is not in the registry")
            return self._origins[index]

    def values(self) -> List[Scalar]:
        with self._lock:
            return list(self._values)


def _compact(x: Scalar) -> Scalar:
    cheap = cheap_fraction(x)
    return cheap if cheap is not None else x


def t_pack(x: Sequence[Scalar], registry: Optional[PackRegistry] = None) -> Scalar:
    """T(x) = x_1 + 2 x_2 + 4 x_3 + 8 x_4 + 16 x_5, exact.

    Args:
        x: Five rationals or combinations over one gap basis
        registry: Registry receiving the packed value

    Returns:
        The packed scalar

    Raises:
        CollisionError: The registry already maps the value to another tuple
    """
    if len(x) != PACK_ARITY:
        raise ValueError(f"T packs {PACK_ARITY}-tuples, got {len(x)} values")
    if any(isinstance(v, TowerMag) for v in x):
        raise ConfigError("tower magnitudes do not support the linear arithmetic of T")
    packed: Scalar = x[0] * 1
    for i, value in enumerate(x[1:], start=1):
        packed = packed + value * (1 << i)
    packed = _compact(packed)
    if registry is not None:
        registry.insert(packed, x)
    return packed


def t_unpack(t: Scalar, registry: PackRegistry) -> Origin:
    """The tuple packed to t.

    Raises:
        NotFoundError: t was never packed into this registry
    """
    return registry.lookup(_compact(t))


@dataclass
class PackDemoReport:
    depth: int
    samples: int
    seed: int
    collisions: int = 0
    tolerance: Scalar = 0
    base_components: int = 0
    union_components: int = 0
    packed_range: Tuple[Optional[Scalar], Optional[Scalar]] = (None, None)
    witnesses: List[Dict[str, Any]] = field(default_factory=list)
    union: List[Any] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        lo, hi = self.packed_range
        return {
            "depth": self.depth, "samples": self.samples, "seed": self.seed,
            "collisions": self.collisions, "tolerance": scalar_to_json(self.tolerance),
            "base_components": self.base_components, "union_components": self.union_components,
            "packed_range": [scalar_to_json(v) if v is not None else None for v in (lo, hi)],
            "witnesses": self.witnesses, "interval_set": self.union,
        }


def pack_demo(system: CantorSystem, depth: int, samples: int = 1000, seed: int = 0) -> PackDemoReport:
    """Finite picture of A ∪ T(Cl X): the base A = 1 + E_K together with packed sample tuples.

    Each sampled coordinate is the left end of a random level-K component of
    A, so T of that component box lies in [t, t + 31 r_K]; the union carries
    these tolerance intervals in place of the closure.

    Args:
        system: Cantor system supplying E_K
        depth: Level K
        samples: Number of random 5-tuples of addresses
        seed: Sampler seed

    Returns:
        PackDemoReport; collisions are counted with witnesses, not raised
    """
    base = system.level_set(depth).translate(1)
    tolerance = _compact(PACK_WEIGHT * system.scale(depth))
    rng = np.random.default_rng(seed)
    registry = PackRegistry()
    report = PackDemoReport(depth, samples, seed, tolerance=tolerance, base_components=len(base))

    for _ in range(samples):
        bits = rng.integers(0, 2, size=(PACK_ARITY, depth))
        addresses = [Address("".join(str(int(b)) for b in row)) for row in bits]
        origin = [_compact(system.address_point(a) + 1) for a in addresses]
        try:
            t_pack(origin, registry)
        except CollisionError as e:
            report.collisions += 1
            logger.warning(f"pack collision: {e.message}")
            if len(report.witnesses) < 20:
                report.witnesses.append({**e.details, "addresses": [str(a) for a in addresses]})

    packed = registry.values()
    if packed:
        report.packed_range = (packed[0], packed[-1])
    pieces = list(base.components) + [Interval(t, t + tolerance) for t in packed]
    union = normalize(pieces)
    report.union_components = len(union)
    report.union = interval_set_to_json(union)
    logger.info(f"pack demo K={depth}: {len(packed)} packed values, {report.collisions} collisions")
    return report

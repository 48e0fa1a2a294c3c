"""
Modulus module for Sparse Forge.
Moduli of continuity φ and the pushforward bound N(f(A), φ(r)) <= N(A, r).
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from config import config
from exact_sets.scalars import GapCombo, Scalar, scalar_lt, sorted_scalars, to_fraction
from magnitudes.psi import PsiSpec, psi_iter_eval
from magnitudes.towers import TowerMag, tower_power_bounds, tower_scaled_upper
from sparsity.profiles import CoveringProfile, ProfileEntry, ProfileMethod

logger = logging.getLogger(__name__)


def _as_magnitude(r: Scalar) -> Scalar:
    """Prefer a TowerMag for single-term combinations and a Fraction when one is in memory."""
    if isinstance(r, GapCombo):
        nonzero = [(j, c) for j, c in enumerate(r.coeffs) if c]
        if len(nonzero) == 1 and nonzero[0][1] == 1:
            j = nonzero[0][0]
            exact = r.basis.materialize_term(j)
            return exact if exact is not None else r.basis.term_tower(j)
        exact = to_fraction(r)
        if exact is None:
            raise ValueError(f"cannot evaluate a modulus at the symbolic radius {r}")
        return exact
    return r


class Modulus(ABC):
    """A strictly increasing φ on [0, inf) with φ(0) = 0."""

    name: str = ""

    @abstractmethod
    def upper(self, r: Scalar) -> Scalar:
        """An exact value of φ(r), or a certified upper bound when no exact form exists."""

    def __str__(self) -> str:
        return self.name


class IdentityModulus(Modulus):
    name = "identity"

    def upper(self, r: Scalar) -> Scalar:
        return r


@dataclass
class PowerModulus(Modulus):
    """φ(r) = r^e, the Hölder moduli."""
    exponent: int

    def __post_init__(self) -> None:
        if self.exponent < 1:
            raise ValueError(f"power modulus needs exponent >= 1, got {self.exponent}")
        self.name = f"power:{self.exponent}"

    def upper(self, r: Scalar) -> Scalar:
        r = _as_magnitude(r)
        if isinstance(r, TowerMag):
            if r.is_rational:
                return r.value() ** self.exponent
            return tower_power_bounds(r, self.exponent)[1]
        return Fraction(r) ** self.exponent


@dataclass
class ScaledModulus(Modulus):
    """φ(r) = c r, the Lipschitz moduli."""
    factor: Fraction

    def __post_init__(self) -> None:
        self.factor = Fraction(self.factor)
        if self.factor <= 0:
            raise ValueError(f"scale factor must be positive, got {self.factor}")
        self.name = f"scaled:{self.factor}"

    def upper(self, r: Scalar) -> Scalar:
        if isinstance(r, GapCombo):
            return r * self.factor
        if isinstance(r, TowerMag):
            bound = tower_scaled_upper(self.factor, r)
            if bound is None:
                raise ValueError(f"no tower bound for {self.factor} * {r}")
            return bound
        return Fraction(r) * self.factor


@dataclass
class PsiModulus(Modulus):
    """φ = ψ_l; exact in the tower domain below 1."""
    l: int

    def __post_init__(self) -> None:
        if self.l < 0:
            raise ValueError(f"psi modulus needs l >= 0, got {self.l}")
        self.name = f"psi:{self.l}"

    def upper(self, r: Scalar) -> Scalar:
        r = _as_magnitude(r)
        magnitude = r if isinstance(r, TowerMag) else TowerMag.from_rational(r)
        if magnitude.at_most_one():
            return magnitude.psi(self.l)
        return psi_iter_eval(PsiSpec(self.l), magnitude.value(), config.PRECISION_CEILING).hi


def parse_modulus(token: str) -> Modulus:
    """Read `identity`, `power:2`, `scaled:1/2` or `psi:1`."""
    kind, _, arg = token.strip().lower().partition(":")
    if kind == "identity":
        return IdentityModulus()
    if kind == "power":
        return PowerModulus(int(arg or 2))
    if kind == "scaled":
        return ScaledModulus(Fraction(arg or 1))
    if kind == "psi":
        return PsiModulus(int(arg or 1))
    raise ValueError(f"unknown modulus {token!r}")


def check_monotone(phi: Modulus, samples: Sequence[Scalar]) -> bool:
    """True when φ is certified strictly increasing along the sorted samples."""
    ordered = sorted_scalars(samples)
    images = [phi.upper(r) for r in ordered]
    for (a, b), (fa, fb) in zip(zip(ordered, ordered[1:]), zip(images, images[1:])):
        if scalar_lt(a, b) and not scalar_lt(fa, fb):
            logger.warning(f"{phi}: images of {a} < {b} are not strictly ordered")
            return False
    return True


def modulus_pushforward(profile: CoveringProfile, phi: Modulus) -> CoveringProfile:
    """Upper-bound profile (φ(r), N) for any image f(A) with modulus of continuity φ.

    When φ(r) has no exact form an upper bound ρ >= φ(r) is used, which keeps
    N(f(A), ρ) <= N(A, r). Every entry is marked BOUND.

    Raises:
        ValueError: φ is not certified monotone on the profile's radii
    """
    radii = profile.radii()
    if not isinstance(phi, IdentityModulus) and not check_monotone(phi, radii):
        raise ValueError(f"{phi} is not certified monotone on the profile radii")
    entries = tuple(ProfileEntry(phi.upper(e.r), e.n, ProfileMethod.BOUND) for e in profile)
    logger.info(f"Pushed {len(entries)} profile entries forward through {phi}")
    return CoveringProfile(entries, source=f"{profile.source} via {phi}")

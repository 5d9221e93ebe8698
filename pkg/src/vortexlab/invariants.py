"""Equivariant invariants of weighted circle actions on C^n.

The invariant is computed as the torus integral of the inverse product of
Chern series of the index bundles Ind^k over the Jacobian torus T^{2g}.  The
Chern character of Ind^k comes from a fibre integration in the exterior
algebra of T^{2g} x Sigma, and Chern classes are recovered from it with
Newton's identities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence, Tuple

from .cohomology import (
    OmegaPolynomial,
    RingElement,
    exp_nilpotent,
    integrate_fiber_Sigma,
    integrate_torus,
    invert_unit,
    mul,
    omega_coefficients,
)


class OutsideChamberError(ValueError):
    """The insertion count m is negative."""


@dataclass(frozen=True)
class WeightedProblem:
    weights: Tuple[int, ...]
    degree: int
    genus: int

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        if not self.weights:
            raise ValueError("need at least one weight")
        if any(w < 1 for w in self.weights):
            raise ValueError("weights must be positive integers")
        if self.genus < 0:
            raise ValueError("genus must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def m(self) -> int:
        g, d = self.genus, self.degree
        return sum(d * l + 1 - g for l in self.weights) + g - 1


@dataclass(frozen=True)
class FamilyIndex:
    """Rank and Chern classes c_j = chern[j] * Omega^j of Ind^k."""

    k: int
    degree: int
    genus: int
    rank: int
    chern: Tuple[Fraction, ...]
    ch: Tuple[Fraction, ...]

    def chern_polynomial(self) -> OmegaPolynomial:
        return OmegaPolynomial(self.genus, self.chern)

    def ch_polynomial(self) -> OmegaPolynomial:
        return OmegaPolynomial(self.genus, self.ch)


def first_chern_universal(k: int, d: int, g: int) -> RingElement:
    """c_1(L^k) = k (sum_j alpha_j tau_j + d sigma) on T^{2g} x Sigma."""
    c1 = RingElement.sigma(g) * d
    for j in range(1, 2 * g + 1):
        c1 = c1 + mul(RingElement.alpha(g, j), RingElement.tau(g, j))
    return c1 * k


def todd_surface(g: int) -> RingElement:
    return RingElement.scalar(g) + RingElement.sigma(g) * (1 - g)


@lru_cache(maxsize=None)
def chern_character_index(k: int, d: int, g: int) -> RingElement:
    """ch(Ind^k) = int_Sigma td(T Sigma) ch(L^k), as an element of H^*(T^{2g})."""
    ch_line = exp_nilpotent(first_chern_universal(k, d, g))
    return integrate_fiber_Sigma(mul(todd_surface(g), ch_line))


def chern_from_character(rank: int, ch: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """Chern classes from Chern character components (Newton's identities).

    ``ch[j]`` is the coefficient of the degree-2j part; ``ch[0]`` is ignored
    in favour of ``rank``.  Power sums are p_j = j! ch_j.
    """
    n = len(ch)
    p = [Fraction(0)] + [math.factorial(j) * Fraction(ch[j]) for j in range(1, n)]
    c = [Fraction(1)] + [Fraction(0)] * (n - 1)
    for j in range(1, n):
        s = sum((-1) ** (i - 1) * c[j - i] * p[i] for i in range(1, j + 1))
        c[j] = s / j
    return tuple(c)


def character_from_chern(rank: int, c: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """Inverse of :func:`chern_from_character`."""
    n = len(c)
    p = [Fraction(0)] * n
    for j in range(1, n):
        s = sum((-1) ** (i - 1) * Fraction(c[j - i]) * p[i] for i in range(1, j))
        # j c_j = s + (-1)^(j-1) c_0 p_j
        p[j] = (j * Fraction(c[j]) - s) * (-1) ** (j - 1) / Fraction(c[0])
    return (Fraction(rank),) + tuple(p[j] / math.factorial(j) for j in range(1, n))


@lru_cache(maxsize=None)
def family_index(k: int, d: int, g: int) -> FamilyIndex:
    if g < 0:
        raise ValueError("genus must be nonnegative")
    ch = omega_coefficients(chern_character_index(k, d, g))
    rank = ch.coeffs[0]
    if rank.denominator != 1:
        raise ArithmeticError("non-integral index")
    chern = chern_from_character(int(rank), ch.coeffs)
    return FamilyIndex(k, d, g, int(rank), chern, ch.coeffs)


def chern_series(F: FamilyIndex, eta) -> OmegaPolynomial:
    """c(Ind, eta) = sum_j eta^(index - j) c_j."""
    eta = Fraction(eta)
    if eta == 0:
        raise ZeroDivisionError("eta must be nonzero")
    coeffs = tuple(eta ** (F.rank - j) * cj for j, cj in enumerate(F.chern))
    return OmegaPolynomial(F.genus, coeffs)


def chern_series_closed_form(k: int, d: int, g: int, eta) -> OmegaPolynomial:
    """eta^(dk+1-g) exp(-k^2 Omega / eta), expanded directly."""
    eta = Fraction(eta)
    x = Fraction(-k * k) / eta
    return OmegaPolynomial(
        g, tuple(eta ** (d * k + 1 - g) * x**j / math.factorial(j) for j in range(g + 1))
    )


def _check_chamber(p: WeightedProblem) -> None:
    if p.m < 0:
        raise OutsideChamberError(f"m = {p.m} < 0: no insertion c^m")


def invariant_weighted(p: WeightedProblem) -> Fraction:
    """Localization integral int_{T^{2g}} 1 / prod_nu c(Ind^{l_nu}, l_nu)."""
    _check_chamber(p)
    g = p.genus
    denom = OmegaPolynomial.one(g)
    for l in p.weights:
        denom = denom * chern_series(family_index(l, p.degree, g), l)
    return denom.inverse().integrate()


def invariant_weighted_ring(p: WeightedProblem) -> Fraction:
    """Same integral evaluated entirely in the exterior algebra of T^{2g}."""
    _check_chamber(p)
    g = p.genus
    denom = RingElement.scalar(g)
    for l in p.weights:
        denom = mul(denom, chern_series(family_index(l, p.degree, g), l).to_ring())
    return integrate_torus(invert_unit(denom))


def invariant_closed_form(p: WeightedProblem) -> Fraction:
    """(sum l)^g prod l^(-d l + g - 1)."""
    g, d = p.genus, p.degree
    out = Fraction(sum(p.weights)) ** g
    for l in p.weights:
        out *= Fraction(l) ** (-d * l + g - 1)
    return out


def dimension_weighted(p: WeightedProblem) -> int:
    return 2 * (p.degree * sum(p.weights) - (p.n - 1) * (p.genus - 1))


def sw_ruled(d: int, k: int, g: int) -> Fraction:
    """Seiberg-Witten number of Sigma x S^2 via d+1 unit weights in degree k.

    Returns 0 when m = d(1-g) + (d+1)k is negative.
    """
    if d < 0 or k < 0 or g < 0:
        raise ValueError("d, k, g must be nonnegative")
    p = WeightedProblem((1,) * (d + 1), k, g)
    if p.m < 0:
        return Fraction(0)
    return invariant_weighted(p)

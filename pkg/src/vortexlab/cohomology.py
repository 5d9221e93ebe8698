"""Exact rational cohomology of T^{2g} x Sigma and of T^{2g}.

Basis monomials are pairs ``(taus, tag)``: ``taus`` is an ascending tuple of
indices 1..2g of the degree-one torus classes, and ``tag`` names the Sigma
factor (``0`` for 1, ``j`` in 1..2g for alpha_j, ``SIGMA`` for the volume
class).  A monomial is always read as ``tau_{i1} ... tau_{ik} * tag``.

The alpha classes multiply through the intersection form
``alpha_j alpha_{g+j} = sigma``; everything of degree > 2 on Sigma vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Mapping, Tuple

SIGMA = -1

Monomial = Tuple[Tuple[int, ...], int]


def tag_degree(tag: int) -> int:
    if tag == 0:
        return 0
    if tag == SIGMA:
        return 2
    return 1


def _sort_sign(seq: Iterable[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sign of the permutation sorting ``seq``; 0 when an index repeats."""
    items = list(seq)
    if len(set(items)) != len(items):
        return 0, ()
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(items)


def _tag_product(a: int, b: int, g: int) -> Tuple[int, int]:
    if a == 0:
        return 1, b
    if b == 0:
        return 1, a
    if a == SIGMA or b == SIGMA:
        return 0, 0
    if b == a + g:
        return 1, SIGMA
    if a == b + g:
        return -1, SIGMA
    return 0, 0


@lru_cache(maxsize=None)
def _monomial_product(x: Monomial, y: Monomial, g: int) -> Tuple[int, Monomial]:
    taus_x, tag_x = x
    taus_y, tag_y = y
    # move tag_x past the torus part of y
    sign = -1 if (tag_degree(tag_x) * len(taus_y)) % 2 else 1
    s_tau, taus = _sort_sign(taus_x + taus_y)
    if s_tau == 0:
        return 0, ((), 0)
    s_tag, tag = _tag_product(tag_x, tag_y, g)
    if s_tag == 0:
        return 0, ((), 0)
    return sign * s_tau * s_tag, (taus, tag)


def monomial_degree(m: Monomial) -> int:
    return len(m[0]) + tag_degree(m[1])


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        raise TypeError("coefficients must be exact (int or Fraction), got float")
    return Fraction(c)


@dataclass(frozen=True)
class RingElement:
    """Sparse element of H^*(T^{2g} x Sigma; Q) with exact coefficients."""

    genus: int
    coeffs: Mapping[Monomial, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.genus < 0:
            raise ValueError("genus must be nonnegative")
        clean: Dict[Monomial, Fraction] = {}
        for mono, c in self.coeffs.items():
            c = _as_fraction(c)
            if c != 0:
                self._check_monomial(mono)
                clean[mono] = c
        object.__setattr__(self, "coeffs", clean)

    def _check_monomial(self, mono: Monomial) -> None:
        taus, tag = mono
        g = self.genus
        if list(taus) != sorted(set(taus)) or any(not 1 <= t <= 2 * g for t in taus):
            raise ValueError(f"bad torus part {taus!r} for genus {g}")
        if not (tag in (0, SIGMA) or 1 <= tag <= 2 * g):
            raise ValueError(f"bad Sigma tag {tag!r} for genus {g}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def scalar(cls, g: int, c=1) -> "RingElement":
        return cls(g, {((), 0): c})

    @classmethod
    def tau(cls, g: int, j: int) -> "RingElement":
        return cls(g, {((j,), 0): 1})

    @classmethod
    def alpha(cls, g: int, j: int) -> "RingElement":
        return cls(g, {((), j): 1})

    @classmethod
    def sigma(cls, g: int) -> "RingElement":
        return cls(g, {((), SIGMA): 1})

    @classmethod
    def omega(cls, g: int) -> "RingElement":
        """Class of the standard symplectic form sum_j tau_j tau_{g+j}."""
        return cls(g, {((j, g + j), 0): 1 for j in range(1, g + 1)})

    # -- arithmetic ---------------------------------------------------------

    def _same_genus(self, other: "RingElement") -> None:
        if self.genus != other.genus:
            raise ValueError(f"genus mismatch: {self.genus} vs {other.genus}")

    def _coerce(self, other) -> "RingElement":
        if isinstance(other, RingElement):
            self._same_genus(other)
            return other
        return RingElement.scalar(self.genus, _as_fraction(other))

    def __add__(self, other) -> "RingElement":
        other = self._coerce(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, Fraction(0)) + c
        return RingElement(self.genus, out)

    __radd__ = __add__

    def __neg__(self) -> "RingElement":
        return RingElement(self.genus, {m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other) -> "RingElement":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RingElement":
        return self._coerce(other) - self

    def __mul__(self, other) -> "RingElement":
        if not isinstance(other, RingElement):
            c = _as_fraction(other)
            return RingElement(self.genus, {m: c * v for m, v in self.coeffs.items()})
        return mul(self, other)

    def __rmul__(self, other) -> "RingElement":
        c = _as_fraction(other)
        return RingElement(self.genus, {m: c * v for m, v in self.coeffs.items()})

    def __truediv__(self, other) -> "RingElement":
        return self * (1 / _as_fraction(other))

    def __pow__(self, n: int) -> "RingElement":
        if n < 0:
            return invert_unit(self) ** (-n)
        out = RingElement.scalar(self.genus)
        for _ in range(n):
            out = mul(out, self)
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, RingElement):
            return self.genus == other.genus and self.coeffs == other.coeffs
        try:
            return self == RingElement.scalar(self.genus, _as_fraction(other))
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.genus, frozenset(self.coeffs.items())))

    # -- inspection ---------------------------------------------------------

    @property
    def scalar_part(self) -> Fraction:
        return self.coeffs.get(((), 0), Fraction(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def homogeneous_part(self, degree: int) -> "RingElement":
        return RingElement(
            self.genus, {m: c for m, c in self.coeffs.items() if monomial_degree(m) == degree}
        )

    def degrees(self) -> set:
        return {monomial_degree(m) for m in self.coeffs}

    def on_torus(self) -> bool:
        """True when no Sigma classes occur (element of H^*(T^{2g}))."""
        return all(tag == 0 for _, tag in self.coeffs)

    def to_json(self) -> Dict[str, str]:
        out = {}
        for (taus, tag), c in sorted(self.coeffs.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            parts = [f"t{j}" for j in taus]
            if tag == SIGMA:
                parts.append("s")
            elif tag:
                parts.append(f"a{tag}")
            out["*".join(parts) or "1"] = f"{c.numerator}/{c.denominator}"
        return out

    def __repr__(self) -> str:
        return f"RingElement(g={self.genus}, {self.to_json()})"


def mul(a: RingElement, b: RingElement) -> RingElement:
    """Graded-commutative product."""
    if a.genus != b.genus:
        raise ValueError(f"genus mismatch: {a.genus} vs {b.genus}")
    g = a.genus
    out: Dict[Monomial, Fraction] = {}
    for ma, ca in a.coeffs.items():
        for mb, cb in b.coeffs.items():
            s, m = _monomial_product(ma, mb, g)
            if s:
                out[m] = out.get(m, Fraction(0)) + s * ca * cb
    return RingElement(g, out)


def exp_nilpotent(x: RingElement) -> RingElement:
    """exp(x) for x without scalar part; the series terminates."""
    if x.scalar_part != 0:
        raise ValueError("exp_nilpotent needs zero scalar part")
    out = RingElement.scalar(x.genus)
    term = RingElement.scalar(x.genus)
    k = 0
    while True:
        k += 1
        term = mul(term, x) / k
        if term.is_zero():
            return out
        out = out + term


def invert_unit(x: RingElement) -> RingElement:
    """Inverse of an element with nonzero scalar part (geometric series)."""
    c = x.scalar_part
    if c == 0:
        raise ZeroDivisionError("invert_unit needs nonzero scalar part")
    n = (x - c) / c  # nilpotent
    out = RingElement.scalar(x.genus)
    term = RingElement.scalar(x.genus)
    while True:
        term = -mul(term, n)
        if term.is_zero():
            return out / c
        out = out + term


def integrate_fiber_Sigma(x: RingElement) -> RingElement:
    """Push forward along Sigma: keep sigma-tagged monomials, drop the rest."""
    return RingElement(x.genus, {(taus, 0): c for (taus, tag), c in x.coeffs.items() if tag == SIGMA})


@lru_cache(maxsize=None)
def top_orientation_sign(g: int) -> int:
    """Sign relating tau_1...tau_2g to the oriented top class.

    The oriented class is tau_1 tau_{g+1} tau_2 tau_{g+2} ... = Omega^g / g!.
    """
    order = []
    for j in range(1, g + 1):
        order += [j, g + j]
    sign, _ = _sort_sign(order)
    return sign


def integrate_torus(x: RingElement) -> Fraction:
    """Integral over T^{2g}, normalised so that Omega^g / g! integrates to 1."""
    if not x.on_torus():
        raise ValueError("integrate_torus needs an element of H^*(T^{2g}) (Sigma part present)")
    g = x.genus
    top = (tuple(range(1, 2 * g + 1)), 0)
    return top_orientation_sign(g) * x.coeffs.get(top, Fraction(0))


# ---------------------------------------------------------------------------
# Q[Omega] / (Omega^{g+1}) as truncated coefficient lists.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OmegaPolynomial:
    """Element sum_j c_j Omega^j of the subring Q[Omega]/(Omega^{g+1})."""

    genus: int
    coeffs: Tuple[Fraction, ...]

    def __post_init__(self):
        cs = [_as_fraction(c) for c in self.coeffs][: self.genus + 1]
        cs += [Fraction(0)] * (self.genus + 1 - len(cs))
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def one(cls, g: int) -> "OmegaPolynomial":
        return cls(g, (1,))

    def __mul__(self, other) -> "OmegaPolynomial":
        if not isinstance(other, OmegaPolynomial):
            c = _as_fraction(other)
            return OmegaPolynomial(self.genus, tuple(c * v for v in self.coeffs))
        if other.genus != self.genus:
            raise ValueError("genus mismatch")
        n = self.genus + 1
        out = [Fraction(0)] * n
        for i, a in enumerate(self.coeffs):
            if a:
                for j in range(n - i):
                    out[i + j] += a * other.coeffs[j]
        return OmegaPolynomial(self.genus, tuple(out))

    __rmul__ = __mul__

    def __add__(self, other: "OmegaPolynomial") -> "OmegaPolynomial":
        return OmegaPolynomial(self.genus, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "OmegaPolynomial") -> "OmegaPolynomial":
        return OmegaPolynomial(self.genus, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def inverse(self) -> "OmegaPolynomial":
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ZeroDivisionError("no inverse: vanishing scalar part")
        out = [Fraction(0)] * (self.genus + 1)
        out[0] = 1 / c0
        for k in range(1, self.genus + 1):
            s = sum(self.coeffs[i] * out[k - i] for i in range(1, k + 1))
            out[k] = -s / c0
        return OmegaPolynomial(self.genus, tuple(out))

    def to_ring(self) -> RingElement:
        return omega_embedding(self)

    def integrate(self) -> Fraction:
        """Integral over T^{2g}; Omega^g integrates to g!."""
        return self.coeffs[self.genus] * math.factorial(self.genus)


@lru_cache(maxsize=None)
def _omega_powers(g: int) -> Tuple[RingElement, ...]:
    om = RingElement.omega(g)
    powers = [RingElement.scalar(g)]
    for _ in range(g):
        powers.append(mul(powers[-1], om))
    return tuple(powers)


def omega_embedding(p: OmegaPolynomial) -> RingElement:
    out = RingElement(p.genus, {})
    for c, power in zip(p.coeffs, _omega_powers(p.genus)):
        if c:
            out = out + power * c
    return out


def omega_coefficients(x: RingElement) -> OmegaPolynomial:
    """Write a torus element as a polynomial in Omega; raises if it is not one."""
    g = x.genus
    if not x.on_torus():
        raise ValueError("element has a Sigma part")
    coeffs = []
    for k, power in enumerate(_omega_powers(g)):
        part = x.homogeneous_part(2 * k)
        if part.is_zero():
            coeffs.append(Fraction(0))
            continue
        mono, c = next(iter(power.coeffs.items()))
        coeffs.append(part.coeffs.get(mono, Fraction(0)) / c)
    p = OmegaPolynomial(g, tuple(coeffs))
    if omega_embedding(p) != x:
        raise ValueError("element is not a polynomial in Omega")
    return p

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexlab.cohomology import OmegaPolynomial
from vortexlab.invariants import (
    OutsideChamberError,
    WeightedProblem,
    character_from_chern,
    chern_from_character,
    chern_series,
    chern_series_closed_form,
    dimension_weighted,
    family_index,
    invariant_closed_form,
    invariant_weighted,
    invariant_weighted_ring,
    sw_ruled,
)


def omega_exp(g, c):
    """exp(c Omega) truncated in Q[Omega]/(Omega^{g+1}); independent oracle."""
    return OmegaPolynomial(g, tuple(Fraction(c) ** j / math.factorial(j) for j in range(g + 1)))


def test_family_index_examples():
    F = family_index(2, 1, 2)
    assert F.rank == 1
    assert F.ch[:2] == (1, -4)
    assert F.chern[:3] == (1, -4, 8)
    F = family_index(1, 1, 1)
    assert F.rank == 1 and F.chern == (1, -1)
    for k, d in [(0, 0), (3, 2), (5, 1)]:
        F = family_index(k, d, 0)
        assert F.rank == d * k + 1 and F.chern == (1,)


@pytest.mark.parametrize("k,d,g", [(k, d, g) for k in range(5) for d in range(4) for g in range(4)])
def test_chern_classes_are_powers_of_c1(k, d, g):
    F = family_index(k, d, g)
    assert F.rank == d * k + 1 - g
    assert F.chern_polynomial() == omega_exp(g, -k * k)


def test_chern_series_examples():
    assert chern_series(family_index(1, 1, 1), 1) == OmegaPolynomial(1, (1, -1))
    assert chern_series(family_index(2, 1, 1), 2) == OmegaPolynomial(1, (4, -8))
    assert chern_series(family_index(3, 2, 0), 1) == OmegaPolynomial(0, (1,))
    with pytest.raises((ValueError, ZeroDivisionError)):
        chern_series(family_index(1, 1, 1), 0)


@pytest.mark.parametrize("k,d,g,eta", [(1, 1, 1, 1), (2, 3, 2, 2), (3, 1, 4, Fraction(1, 3)), (4, 0, 3, 5)])
def test_chern_series_symbolic_form(k, d, g, eta):
    F = family_index(k, d, g)
    expect = omega_exp(g, Fraction(-k * k) / Fraction(eta)) * (Fraction(eta) ** (d * k + 1 - g))
    assert chern_series(F, eta) == expect
    assert chern_series_closed_form(k, d, g, eta) == expect


def test_invariant_examples():
    assert invariant_weighted(WeightedProblem((1, 1), 1, 1)) == 2
    assert invariant_weighted(WeightedProblem((2,), 1, 0)) == Fraction(1, 8)
    for n in range(1, 5):
        for d in range(3):
            for g in range(3):
                p = WeightedProblem((1,) * n, d, g)
                if p.m >= 0:
                    assert invariant_weighted(p) == n**g


def test_outside_chamber_rejected():
    p = WeightedProblem((1, 1), 0, 3)
    assert p.m == -2
    with pytest.raises(OutsideChamberError):
        invariant_weighted(p)


def test_problem_validation():
    with pytest.raises(ValueError):
        WeightedProblem((), 1, 1)
    with pytest.raises(ValueError):
        WeightedProblem((0, 1), 1, 1)
    with pytest.raises(ValueError):
        WeightedProblem((1,), 1, -1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=3), st.integers(0, 4), st.integers(0, 3))
def test_ring_route_equals_omega_route(weights, d, g):
    p = WeightedProblem(tuple(weights), d, g)
    if p.m < 0:
        return
    assert invariant_weighted_ring(p) == invariant_weighted(p) == invariant_closed_form(p)


def test_sw_ruled_examples():
    assert sw_ruled(2, 1, 1) == 3
    assert sw_ruled(1, 3, 2) == 4
    for g in range(5):
        assert sw_ruled(0, 2, g) == 1
    # m = d(1-g) + (d+1)k < 0: both invariants are zero
    assert sw_ruled(3, 0, 4) == 0


def test_unit_weights_match_sw_ruled():
    for d in range(4):
        for k in range(4):
            for g in range(4):
                p = WeightedProblem((1,) * (d + 1), k, g)
                if p.m >= 0:
                    assert invariant_weighted(p) == sw_ruled(d, k, g)


def test_dimension_examples():
    assert dimension_weighted(WeightedProblem((1, 1), 1, 0)) == 6
    assert dimension_weighted(WeightedProblem((1,), 0, 1)) == 0


@settings(max_examples=100, deadline=None)
@given(st.integers(-3, 8), st.lists(st.fractions(max_denominator=6).filter(lambda x: abs(x) < 10), min_size=0, max_size=5))
def test_chern_character_roundtrip(rank, tail):
    c = (Fraction(1),) + tuple(tail)
    assert chern_from_character(rank, character_from_chern(rank, c)) == c


def test_character_roundtrip_on_family_index():
    for k in range(4):
        for g in range(4):
            F = family_index(k, 2, g)
            assert character_from_chern(F.rank, F.chern) == F.ch

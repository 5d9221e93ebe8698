import math

import numpy as np
import pytest

from vortexlab.acceptance import separable_bump
from vortexlab.coupled_kw import (
    ProductGrid,
    coupled_residual,
    prop_kw_certificate,
    reduce_to_constant,
    solve_coupled,
)
from vortexlab.kazdan_warner import ProblemError, fiber_response, solve_kws
from vortexlab.surface import TorusGrid, laplacian, poisson_solve


@pytest.fixture(scope="module")
def pg():
    return ProductGrid(TorusGrid(8, 8), TorusGrid(12, 12))


@pytest.fixture(scope="module")
def bump_solution(pg):
    h = separable_bump(pg)
    return h, solve_coupled(pg, h, 2.0, tol=1e-10)


def test_layout(pg):
    a = np.arange(np.prod(pg.shape), dtype=float).reshape(pg.shape)
    assert pg.flatten(a).shape == (64, 144)
    assert np.array_equal(pg.unflatten(pg.flatten(a)), a)
    assert pg.integrate(np.ones(pg.shape)) == pytest.approx(1.0)


def test_constant_solution(pg):
    for a in (0.5, 3.0):
        rep = solve_coupled(pg, np.ones(pg.shape), a)
        assert np.max(np.abs(rep.u - math.log(a))) < 1e-9
        assert rep.outer_iters == 0


def test_reduce_to_constant_examples(pg):
    a, v = reduce_to_constant(pg, 1.7)
    assert a == pytest.approx(1.7, abs=1e-14) and np.max(np.abs(v)) < 1e-14
    X, Y = pg.sigma.mesh()
    mode = 0.4 * np.cos(2 * np.pi * X)
    f = 1.0 + np.broadcast_to(mode[..., None, None], pg.shape)
    a, v = reduce_to_constant(pg, f)
    assert a == pytest.approx(1.0, abs=1e-14)
    expect = poisson_solve(pg.sigma, mode)
    assert np.max(np.abs(v - expect[..., None, None])) < 1e-13


def test_reduce_to_constant_identity(pg):
    rng = np.random.default_rng(0)
    f = 1.0 + rng.standard_normal(pg.shape)
    a, v = reduce_to_constant(pg, f)
    lhs = laplacian(pg.sigma, pg.fiber_mean(v))[..., None, None] + laplacian(pg.fiber, v)
    assert np.max(np.abs(lhs - (f - a))) < 1e-10


def test_bump_solution_and_uniqueness(pg, bump_solution):
    h, rep = bump_solution
    assert rep.residual_sup <= 1e-10
    res = coupled_residual(pg, rep.u, h, np.full(pg.shape, 2.0))
    assert np.max(np.abs(res)) == pytest.approx(rep.residual_sup)
    other = solve_coupled(pg, h, 2.0, tol=1e-10, t0=np.full(pg.sigma.shape, 2.5))
    assert np.max(np.abs(other.u - rep.u)) <= 1e-9


def test_nesting_consistency(pg, bump_solution):
    h, rep = bump_solution
    u_sigma = pg.fiber_mean(rep.u)
    for i, j in [(0, 0), (2, 5), (7, 3)]:
        fib = solve_kws(pg.fiber, h[i, j], u_sigma[i, j], tol=1e-11).u
        assert np.max(np.abs(fib - rep.u[i, j])) <= 1e-9


def test_outer_map_is_monotone(pg):
    h = separable_bump(pg)
    for i, j in [(0, 0), (4, 4)]:
        vals = [fiber_response(pg.fiber, h[i, j], t) for t in np.linspace(-2, 2, 7)]
        assert all(b > a for a, b in zip(vals, vals[1:]))


def test_reduction_correctness(pg):
    h = separable_bump(pg)
    rng = np.random.default_rng(1)
    X, Y = pg.sigma.mesh()
    f = 2.0 + 0.3 * np.cos(2 * np.pi * Y)[..., None, None] + 0.1 * rng.standard_normal(pg.shape)
    tol = 1e-10
    direct = solve_coupled(pg, h, f, tol=tol)
    a, v = reduce_to_constant(pg, f)
    reduced = solve_coupled(pg, np.exp(v) * h, a, tol=tol)
    assert np.max(np.abs(direct.u - (v + reduced.u))) <= 10 * tol


def test_certificate(pg, bump_solution):
    h, rep = bump_solution
    cert = prop_kw_certificate(pg, rep.u, h, 2.0)
    assert cert.passed and cert.delta > 0 and cert.min_a_minus_lap >= -1e-8
    a = 3.0
    c = prop_kw_certificate(pg, np.full(pg.shape, math.log(a)), np.ones(pg.shape), a)
    assert c.passed and c.min_a_minus_lap == pytest.approx(a)
    assert c.delta == pytest.approx(min(a, 1 / a, 1 / a))
    # a non-solution whose mean has a sharp peak violates a - L u_Sigma >= 0
    bad = rep.u.copy()
    bad[3, 3] -= 5.0
    assert not prop_kw_certificate(pg, bad, h, 2.0).passed


def test_errors(pg):
    with pytest.raises(ProblemError, match="integral of f"):
        solve_coupled(pg, np.ones(pg.shape), -1.0)
    with pytest.raises(ProblemError, match="integral of h"):
        solve_coupled(pg, np.zeros(pg.shape), 1.0)
    h = np.ones(pg.shape)
    h[0, 0, 0, 0] = -1.0
    with pytest.raises(ProblemError, match="h < 0"):
        solve_coupled(pg, h, 1.0)
    with pytest.raises(ProblemError):
        solve_coupled(pg, np.ones((2, 2)), 1.0)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexlab import lie
from vortexlab.surface import (
    LatticeConnection,
    TorusGrid,
    TwistedSection,
    cocycle_defect,
    covariant_d,
    covariant_d_star,
    curvature,
    d,
    d_star,
    inner_0,
    inner_1,
    laplacian,
    lie_inner_0,
    lie_inner_1,
    poisson_solve,
    reference_connection,
    section_shift,
    smooth_periodic,
)


def test_grid_validation_and_volume():
    with pytest.raises(ValueError):
        TorusGrid(3, 8)
    with pytest.raises(ValueError):
        TorusGrid(2, 8)
    with pytest.raises(ValueError):
        TorusGrid(8, 8, -1.0)
    g = TorusGrid(8, 6, 2.0, 0.5)
    assert g.volume == pytest.approx(1.0)
    assert float(g.integrate(np.ones(g.shape))) == pytest.approx(g.volume, rel=1e-15)


def test_laplacian_examples():
    g = TorusGrid(16, 12, 1.5, 0.8)
    assert np.allclose(laplacian(g, np.full(g.shape, 3.2)), 0, atol=1e-12)
    X, _ = g.mesh()
    c = np.cos(2 * np.pi * X / g.lx)
    eig = (2 / g.hx**2) * (1 - math.cos(2 * np.pi * g.hx / g.lx))
    assert np.max(np.abs(laplacian(g, c) - eig * c)) < 1e-11
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2,) + g.shape)
    assert inner_0(g, laplacian(g, u), v) == pytest.approx(inner_0(g, u, laplacian(g, v)), rel=1e-12)


def test_poisson_examples():
    g = TorusGrid(16, 20, 1.0, 2.0)
    assert np.all(poisson_solve(g, np.zeros(g.shape)) == 0)
    rng = np.random.default_rng(1)
    u0 = rng.standard_normal(g.shape)
    u = poisson_solve(g, laplacian(g, u0))
    assert np.max(np.abs(u - (u0 - u0.mean()))) < 1e-12
    X, _ = g.mesh()
    c = np.cos(2 * np.pi * X)
    eig = (2 / g.hx**2) * (1 - math.cos(2 * np.pi * g.hx))
    assert np.max(np.abs(poisson_solve(g, c) - c / eig)) < 1e-14
    with pytest.raises(ValueError):
        poisson_solve(g, np.ones(g.shape))


def test_laplacian_converges_at_second_order():
    rng = np.random.default_rng(2)
    field = smooth_periodic(TorusGrid(4, 4), rng, 2, 1.0)
    errs = []
    for n in (32, 64, 128):
        g = TorusGrid(n, n)
        X, Y = g.mesh()
        errs.append(np.max(np.abs(laplacian(g, field(X, Y)) - field.laplacian(X, Y))))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.9 <= p <= 2.1 for p in orders), orders


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 10), st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_d_dstar_adjoint(hx, hy, seed):
    g = TorusGrid(2 * hx, 2 * hy, 0.7, 1.3)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(g.shape)
    w = tuple(rng.standard_normal((2,) + g.shape))
    a = inner_1(g, d(g, u), w)
    b = inner_0(g, u, d_star(g, w))
    assert abs(a - b) <= 1e-12 * (1 + abs(a))
    assert np.allclose(d_star(g, d(g, u)), laplacian(g, u), atol=1e-10 * np.max(np.abs(laplacian(g, u))))


@pytest.mark.parametrize("group", ["u1", "su2"])
def test_covariant_adjoint_and_examples(group):
    rng = np.random.default_rng(3)
    g = TorusGrid(8, 10, 1.0, 1.4)
    A = LatticeConnection(g, group, lie.random_algebra(group, g.shape, rng), lie.random_algebra(group, g.shape, rng))
    xi = lie.random_algebra(group, g.shape, rng)
    al = (lie.random_algebra(group, g.shape, rng), lie.random_algebra(group, g.shape, rng))
    lhs = lie_inner_1(g, group, covariant_d(A, xi), al)
    rhs = lie_inner_0(g, group, xi, covariant_d_star(A, al))
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))
    zero = np.zeros(g.shape + lie.lie_shape(group), complex)
    assert all(np.all(c == 0) for c in covariant_d(A, zero))
    # the zero connection gives the plain differential componentwise
    A0 = LatticeConnection.zero(g, group)
    ds, dt = covariant_d(A0, xi)
    ps, pt = d(g, xi.reshape(g.shape + (-1,)).transpose(2, 0, 1))
    assert np.allclose(ds.reshape(g.shape + (-1,)).transpose(2, 0, 1), ps)
    assert np.allclose(dt.reshape(g.shape + (-1,)).transpose(2, 0, 1), pt)


def test_u1_covariant_derivative_is_plain_differential():
    rng = np.random.default_rng(4)
    g = TorusGrid(8, 8)
    A = LatticeConnection(g, "u1", lie.random_algebra("u1", g.shape, rng), lie.random_algebra("u1", g.shape, rng))
    xi = lie.random_algebra("u1", g.shape, rng)
    for a, b in zip(covariant_d(A, xi), d(g, xi)):
        assert np.allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("deg,lx,ly", [(1, 1.0, 1.0), (3, 2.0, 0.5), (-2, 1.0, 1.7)])
def test_reference_curvature_and_stokes(deg, lx, ly):
    g = TorusGrid(12, 10, lx, ly)
    F = curvature(reference_connection(g, deg))
    assert np.allclose(F, -2j * np.pi * deg / g.volume, atol=1e-10)
    # Stokes for any connection on the same bundle
    rng = np.random.default_rng(5)
    A0 = reference_connection(g, deg)
    A = A0 + (lie.random_algebra("u1", g.shape, rng), lie.random_algebra("u1", g.shape, rng))
    total = np.sum(curvature(A)) * g.cell_area
    assert abs(total - (-2j * np.pi * deg)) < 1e-10


def test_curvature_examples():
    g = TorusGrid(8, 8)
    assert np.all(curvature(LatticeConnection.zero(g, "u1")) == 0)
    assert np.all(curvature(LatticeConnection.zero(g, "su2")) == 0)
    rng = np.random.default_rng(6)
    A = reference_connection(g, 2) + (lie.random_algebra("u1", g.shape, rng), lie.random_algebra("u1", g.shape, rng))
    chi = rng.standard_normal(g.shape)
    dchi = d(g, chi)
    B = A + (1j * dchi[0], 1j * dchi[1])
    assert np.max(np.abs(curvature(B) - curvature(A))) < 1e-10


def test_su2_curvature_covariance_to_discretization_error():
    from vortexlab.gauge_fix import GaugeTransform, gauge_apply, random_perturbation

    errs = []
    for n in (16, 32, 64):
        g = TorusGrid(n, n)
        rng = np.random.default_rng(7)
        As, At = random_perturbation(g, "su2", rng, 0.5, modes=1)
        A = LatticeConnection(g, "su2", As, At)
        X, Y = g.mesh()
        xi = lie.from_coords(np.stack([np.sin(2 * np.pi * X), np.cos(2 * np.pi * Y), 0.5 * np.sin(2 * np.pi * (X + Y))], -1))
        gt = GaugeTransform.from_algebra(g, "su2", xi)
        # curvature lives on plaquettes, so transform by the plaquette average of g
        gv = gt.values
        gp = 0.25 * (gv + np.roll(gv, -1, 0) + np.roll(gv, -1, 1) + np.roll(np.roll(gv, -1, 0), -1, 1))
        lhs = curvature(gauge_apply(gt, A))
        rhs = lie.dagger(gp) @ curvature(A) @ gp
        errs.append(np.max(np.abs(lhs - rhs)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert orders[-1] > 1.8, errs


def test_twisted_sections_and_cocycle():
    g = TorusGrid(8, 6, 2.0, 1.0)
    assert cocycle_defect(g, 3) < 1e-12
    rng = np.random.default_rng(8)
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    s = TwistedSection(g, v, 2)
    # shift up then down is the identity; a diagonal shift is up then across
    assert np.allclose(section_shift(g, s.shifted(0, 1), 0, -1, 2), v)
    a = section_shift(g, v, 1, 1, 2)
    b = section_shift(g, section_shift(g, v, 0, 1, 2), 1, 0, 2)
    assert np.allclose(a, b)
    # going once around in y multiplies by the transition factor
    w = v
    for _ in range(g.ny):
        w = section_shift(g, w, 0, 1, 2)
    assert np.allclose(w, np.exp(-2j * np.pi * 2 * g.x / g.lx)[:, None] * v)
    with pytest.raises(ValueError):
        TwistedSection(g, np.zeros((4, 4)), 1)


def test_connection_validation():
    g = TorusGrid(8, 8)
    with pytest.raises(ValueError):
        LatticeConnection(g, "su2", np.zeros(g.shape + (2, 2)), np.zeros(g.shape + (2, 2)), 1)
    with pytest.raises(ValueError):
        reference_connection(g, 1) - LatticeConnection.zero(g, "u1")

import numpy as np
import pytest

from vortexlab import lie
from vortexlab.gauge_fix import (
    FROZEN,
    GaugeTransform,
    contraction_exponent,
    coulomb_fix,
    covariant_kernel,
    gauge_apply,
    random_perturbation,
    slice_residual,
)
from vortexlab.krylov import SolverError
from vortexlab.surface import LatticeConnection, TorusGrid, d, laplacian, reference_connection, smooth_periodic


@pytest.fixture(scope="module")
def grid():
    return TorusGrid(16, 16)


def su2_background(grid, seed=0, size=0.5):
    rng = np.random.default_rng(seed)
    As, At = random_perturbation(grid, "su2", rng, size)
    return LatticeConnection(grid, "su2", As, At), rng


def near(A0, rng, size):
    ps, pt = random_perturbation(A0.grid, A0.group, rng, size)
    return LatticeConnection(A0.grid, A0.group, A0.As + ps, A0.At + pt, A0.degree)


# ---------------------------------------------------------------------------
# the gauge action
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("group", ["u1", "su2"])
def test_identity_acts_trivially(grid, group):
    A, _ = su2_background(grid) if group == "su2" else (reference_connection(grid, 2), None)
    B = gauge_apply(GaugeTransform.identity(grid, group), A)
    assert np.allclose(B.As, A.As, atol=1e-14) and np.allclose(B.At, A.At, atol=1e-14)


def test_u1_formula(grid):
    rng = np.random.default_rng(1)
    chi = rng.standard_normal(grid.shape)
    A = reference_connection(grid, 1)
    B = gauge_apply(GaugeTransform.from_algebra(grid, "u1", 1j * chi), A)
    ds, dt = d(grid, chi)
    assert np.allclose(B.As, A.As + 1j * ds, atol=1e-13)
    assert np.allclose(B.At, A.At + 1j * dt, atol=1e-13)
    assert B.degree == 1


@pytest.mark.parametrize("group", ["u1", "su2"])
def test_action_law(grid, group):
    rng = np.random.default_rng(2)
    A = su2_background(grid)[0] if group == "su2" else reference_connection(grid, 1)
    X, Y = grid.mesh()
    xs = [lie.random_algebra(group, grid.shape, rng) * 0.3 for _ in range(2)]
    g, h = (GaugeTransform.from_algebra(grid, group, x) for x in xs)
    lhs = gauge_apply(g * h, A)
    rhs = gauge_apply(h, gauge_apply(g, A))
    assert np.max(np.abs(lhs.As - rhs.As)) < 1e-10 and np.max(np.abs(lhs.At - rhs.At)) < 1e-10
    assert (g * h).constraint_defect() < 1e-13


def test_group_mismatch(grid):
    with pytest.raises(ValueError, match="group mismatch"):
        gauge_apply(GaugeTransform.identity(grid, "u1"), su2_background(grid)[0])
    with pytest.raises(ValueError):
        GaugeTransform.identity(grid, "u1") * GaugeTransform.identity(grid, "su2")
    with pytest.raises(ValueError):
        coulomb_fix(reference_connection(grid, 1), reference_connection(grid, 2))
    with pytest.raises(ValueError):
        coulomb_fix(reference_connection(grid, 1), reference_connection(grid, 1), linearization="other")


# ---------------------------------------------------------------------------
# slice residual
# ---------------------------------------------------------------------------


def test_slice_residual_examples(grid):
    A0, _ = su2_background(grid)
    assert slice_residual(A0, A0) == 0
    R0 = reference_connection(grid, 1)
    assert slice_residual(R0 + (np.full(grid.shape, 0.3j), np.full(grid.shape, -0.7j)), R0) < 1e-12
    rng = np.random.default_rng(3)
    X, Y = grid.mesh()
    chi = smooth_periodic(grid, rng, 2, 1.0)(X, Y)
    ds, dt = d(grid, chi)
    r = slice_residual(R0 + (1j * ds, 1j * dt), R0)
    assert r == pytest.approx(float(np.max(np.abs(laplacian(grid, chi)))), rel=1e-12)


def test_kernel_dimensions(grid):
    assert len(covariant_kernel(reference_connection(grid, 1))) == 1
    assert len(covariant_kernel(LatticeConnection.zero(grid, "su2"))) == 3
    assert len(covariant_kernel(su2_background(grid)[0])) == 0


# ---------------------------------------------------------------------------
# Coulomb fixing
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("group", ["u1", "su2"])
def test_fixed_point_takes_no_steps(grid, group):
    A0 = su2_background(grid)[0] if group == "su2" else reference_connection(grid, 1)
    g, A, tr = coulomb_fix(A0, A0)
    assert tr.steps == 0 and g.constraint_defect() == 0
    assert np.array_equal(A.As, A0.As)


def test_u1_one_linear_solve(grid):
    rng = np.random.default_rng(4)
    X, Y = grid.mesh()
    chi = smooth_periodic(grid, rng, 2, 1.0)(X, Y)
    A0 = reference_connection(grid, 2)
    A = gauge_apply(GaugeTransform.from_algebra(grid, "u1", 1j * chi), A0)
    g, Af, tr = coulomb_fix(A, A0, tol=1e-10)
    assert tr.steps == 1 and tr.residual_sup[-1] <= 1e-10
    assert np.max(np.abs(Af.As - A0.As)) < 1e-9 and np.max(np.abs(Af.At - A0.At)) < 1e-9


@pytest.mark.parametrize("linearization", ["exact", FROZEN])
def test_su2_converges_and_is_idempotent(grid, linearization):
    A0, rng = su2_background(grid, 5)
    A = near(A0, rng, 0.05)
    g, Af, tr = coulomb_fix(A, A0, tol=1e-10, max_iter=30, linearization=linearization)
    assert tr.residual_sup[-1] <= 1e-10
    assert g.constraint_defect() < 1e-12
    B = gauge_apply(g, A)
    assert np.max(np.abs(B.As - Af.As)) < 1e-10
    assert coulomb_fix(Af, A0, tol=1e-10)[2].steps == 0
    assert len(tr.dist_lq) == len(tr.dist_w1p) == tr.steps + 1


def test_exact_newton_contracts_faster_than_frozen(grid):
    A0, rng = su2_background(grid, 6)
    exact, frozen = [], []
    for _ in range(4):
        A = near(A0, rng, 0.05)
        exact.append(coulomb_fix(A, A0, tol=1e-11)[2])
        frozen.append(coulomb_fix(A, A0, tol=1e-11, max_iter=40, linearization=FROZEN)[2])
    assert contraction_exponent(exact) >= 1.5
    assert max(t.steps for t in exact) < min(t.steps for t in frozen)


def test_gauge_orbit_consistency(grid):
    A0, rng = su2_background(grid, 7)
    A = near(A0, rng, 0.04)
    h = GaugeTransform.from_algebra(grid, "su2", 0.02 * lie.random_algebra("su2", grid.shape, rng))
    _, F1, t1 = coulomb_fix(A, A0)
    _, F2, t2 = coulomb_fix(gauge_apply(h, A), A0)
    assert t1.residual_sup[-1] <= 1e-10 and t2.residual_sup[-1] <= 1e-10
    # the background has trivial stabilizer, so both land on the same slice point
    assert np.max(np.abs(F1.As - F2.As)) < 1e-8


def test_divergence_and_iteration_cap(grid):
    A0, rng = su2_background(grid, 8)
    A = near(A0, rng, 0.05)
    with pytest.raises(SolverError):
        coulomb_fix(A, A0, max_iter=1)
    with pytest.raises(SolverError):
        coulomb_fix(near(A0, rng, 3.0), A0, max_iter=12, divergence_factor=1.0)


def test_contraction_exponent_needs_data():
    from vortexlab.gauge_fix import IterationTrace

    with pytest.raises(ValueError):
        contraction_exponent([IterationTrace(residual_sup=[1.0])])
    tr = IterationTrace(residual_sup=[1e-1, 1e-2, 1e-4, 1e-8])
    assert contraction_exponent([tr]) == pytest.approx(2.0, rel=1e-12)

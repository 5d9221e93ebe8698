import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexlab.krylov import SolverError, deflated_pcg, orthonormalize, pcg
from vortexlab.surface import TorusGrid, laplacian, poisson_solve


def _spd(rng, n):
    m = rng.standard_normal((n, n))
    return m @ m.T + n * np.eye(n)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_pcg_matches_dense_solve(seed, n):
    rng = np.random.default_rng(seed)
    M = _spd(rng, n)
    b = rng.standard_normal(n)
    res = pcg(lambda x: M @ x, b, tol=1e-13, field_ndim=1)
    assert np.allclose(res.x, np.linalg.solve(M, b), rtol=1e-10, atol=1e-12)


def test_pcg_batched_members_are_independent():
    rng = np.random.default_rng(0)
    Ms = np.stack([_spd(rng, 6) for _ in range(3)])
    B = rng.standard_normal((3, 6))
    res = pcg(lambda X: np.einsum("kij,kj->ki", Ms, X), B, tol=1e-13, field_ndim=1)
    for k in range(3):
        assert np.allclose(res.x[k], np.linalg.solve(Ms[k], B[k]), atol=1e-10)
    assert res.residual.shape == (3,)


def test_pcg_zero_rhs_and_failure():
    res = pcg(lambda x: 2 * x, np.zeros(4), field_ndim=1)
    assert res.iterations == 0 and np.all(res.x == 0)
    rng = np.random.default_rng(1)
    M = _spd(rng, 30)
    with pytest.raises(SolverError):
        pcg(lambda x: M @ x, rng.standard_normal(30), maxiter=1, field_ndim=1)
    out = pcg(lambda x: M @ x, rng.standard_normal(30), maxiter=1, field_ndim=1, raise_on_fail=False)
    assert out.residual > 1e-12


def test_deflated_pcg_inverts_laplacian_on_mean_zero_fields():
    g = TorusGrid(16, 16)
    rng = np.random.default_rng(2)
    f = rng.standard_normal(g.shape)
    f -= f.mean()
    kernel = orthonormalize([np.ones(g.shape)], 2)
    res = deflated_pcg(lambda u: laplacian(g, u), f, kernel, tol=1e-12, maxiter=2000)
    assert np.max(np.abs(res.x - poisson_solve(g, f))) < 1e-9
    with pytest.raises(SolverError):
        deflated_pcg(lambda u: laplacian(g, u), f + 1.0, kernel)


def test_orthonormalize_drops_dependent_vectors():
    v = np.arange(6.0)
    out = orthonormalize([v, 2 * v, np.ones(6)], 1)
    assert len(out) == 2
    assert abs(np.dot(out[0], out[1])) < 1e-14

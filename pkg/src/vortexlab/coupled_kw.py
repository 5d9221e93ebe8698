"""Coupled Kazdan-Warner equation on a product of two flat tori.

Fields on Sigma x S are 4-d arrays indexed [zx, zy, x, y]; the last two
axes are the fibre S.  The equation is

    L_Sigma u_Sigma + L_S u + e^u h = f,     u_Sigma(z) = mean_S u(z, .),

and it is solved along the nested route of its existence proof: reduce f to
a constant a, then run Newton on the mean u_Sigma where every fibre is the
mean-constrained problem and the nonlinearity is the fibre map t -> f_{h_z}(t).
All fibres are solved together as one batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .kazdan_warner import (
    ARMIJO_C,
    MIN_STEP,
    ProblemError,
    _demean,
    _exp,
    fiber_derivative_batch,
    shifted_inverse,
    solve_kws_batch,
)
from .krylov import SolverError, pcg
from .surface import TorusGrid, laplacian, poisson_solve


@dataclass(frozen=True)
class ProductGrid:
    sigma: TorusGrid
    fiber: TorusGrid

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.sigma.shape + self.fiber.shape

    def flatten(self, a: np.ndarray) -> np.ndarray:
        """(nSigma_x * nSigma_y) x (nS_x * nS_y) storage layout."""
        return np.asarray(a).reshape(self.sigma.nx * self.sigma.ny, self.fiber.nx * self.fiber.ny)

    def unflatten(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a).reshape(self.shape)

    def fiber_mean(self, a: np.ndarray) -> np.ndarray:
        return np.mean(a, axis=(-2, -1))

    def integrate(self, a: np.ndarray) -> float:
        return float(np.sum(a) * self.sigma.cell_area * self.fiber.cell_area)


@dataclass
class CoupledReport:
    u: np.ndarray
    residual_sup: float
    outer_iters: int
    history: List[float] = field(default_factory=list)
    fiber_newton_iters: int = 0
    a: float = 0.0

    def summary(self) -> dict:
        return {
            "residual_sup": self.residual_sup,
            "outer_iters": self.outer_iters,
            "history": list(self.history),
            "fiber_newton_iters": self.fiber_newton_iters,
            "a": self.a,
        }


@dataclass
class Certificate:
    passed: bool
    delta: float
    min_a_minus_lap: float


def _as_field(pg: ProductGrid, a: Union[np.ndarray, float], name: str) -> np.ndarray:
    if np.ndim(a) == 0:
        return np.full(pg.shape, float(a))
    a = np.asarray(a, dtype=float)
    if a.shape == (pg.sigma.nx * pg.sigma.ny, pg.fiber.nx * pg.fiber.ny):
        a = pg.unflatten(a)
    if a.shape != pg.shape:
        raise ProblemError(f"{name} has shape {a.shape}, product grid is {pg.shape}")
    if not np.all(np.isfinite(a)):
        raise ProblemError(f"{name} has non-finite entries")
    return a


def coupled_residual(pg: ProductGrid, u: np.ndarray, h: np.ndarray, f: np.ndarray) -> np.ndarray:
    """L_Sigma u_Sigma + L_S u + e^u h - f on every node of the product."""
    u_sigma = pg.fiber_mean(u)
    lap_sigma = laplacian(pg.sigma, u_sigma)
    return lap_sigma[..., None, None] + laplacian(pg.fiber, u) + _exp(u) * h - f


def reduce_to_constant(pg: ProductGrid, f: Union[np.ndarray, float]) -> Tuple[float, np.ndarray]:
    """(a, v) with L_Sigma v_Sigma + L_S v = f - a and a = average of f."""
    f = _as_field(pg, f, "f")
    f_sigma = pg.fiber_mean(f)
    a = float(np.mean(f_sigma))
    v_sigma = poisson_solve(pg.sigma, f_sigma - a, check_mean=False)
    w = poisson_solve(pg.fiber, f - f_sigma[..., None, None], check_mean=False)
    v = v_sigma[..., None, None] + _demean(w)
    return a, v


def _validate(pg: ProductGrid, h: np.ndarray, f: np.ndarray) -> None:
    if np.any(h < 0):
        raise ProblemError(f"hypothesis violated: h < 0 somewhere (min {float(np.min(h)):.3e})")
    if pg.integrate(h) <= 0:
        raise ProblemError("hypothesis violated: integral of h <= 0")
    if pg.integrate(f) <= 0:
        raise ProblemError("hypothesis violated: integral of f <= 0")


class _FiberCache:
    """Latest fibre solutions, used to warm-start the next batch of solves."""

    def __init__(self, pg: ProductGrid, h: np.ndarray, tol: float):
        self.pg, self.h, self.tol = pg, h, tol
        self.v = None
        self.newton_iters = 0

    def solve(self, t: np.ndarray, commit: bool = True) -> Tuple[np.ndarray, np.ndarray]:
        out = solve_kws_batch(self.pg.fiber, self.h, t, self.tol, v0=self.v)
        self.newton_iters += out.iters
        if not out.converged:
            raise SolverError(f"fibre solves did not converge: residual {float(np.max(out.res_sup)):.3e}")
        if commit:
            self.v = out.u - t[..., None, None]
        response = np.mean(_exp(out.u) * self.h, axis=(-2, -1))
        return out.u, response


def _solve_constant(pg: ProductGrid, h: np.ndarray, a: float, tol: float, max_iter: int,
                    t0: Optional[np.ndarray] = None) -> CoupledReport:
    gs = pg.sigma
    fiber_tol = tol / 4
    cache = _FiberCache(pg, h, fiber_tol)
    if t0 is None:
        t0 = np.full(gs.shape, float(np.log(a / np.mean(h))))
    t = np.array(t0, dtype=float)

    u, resp = cache.solve(t)
    G = laplacian(gs, t) + resp - a
    history = [float(np.max(np.abs(G)))]
    it = 0
    outer_tol = tol / 2
    while history[-1] > outer_tol and it < max_iter:
        slope = fiber_derivative_batch(pg.fiber, u, h)
        pre = shifted_inverse(gs, np.asarray(max(float(np.mean(slope)), 1e-300)))
        step = pcg(lambda x: laplacian(gs, x) + slope * x, -G, pre, tol=1e-13, maxiter=2000).x
        n0 = float(np.linalg.norm(G))
        alpha = 1.0
        while True:
            trial = t + alpha * step
            u_t, resp_t = cache.solve(trial, commit=False)
            G_t = laplacian(gs, trial) + resp_t - a
            if np.linalg.norm(G_t) <= (1 - ARMIJO_C * alpha) * n0 or alpha < MIN_STEP:
                break
            alpha /= 2
        t, u, G = trial, u_t, G_t
        cache.v = u - t[..., None, None]
        history.append(float(np.max(np.abs(G))))
        it += 1
    if history[-1] > outer_tol:
        raise SolverError(f"outer Newton did not converge: residual {history[-1]:.3e}")
    res = coupled_residual(pg, u, h, np.full(pg.shape, a))
    return CoupledReport(u, float(np.max(np.abs(res))), it, history, cache.newton_iters, a)


def solve_coupled(pg: ProductGrid, h: np.ndarray, f: Union[np.ndarray, float], tol: float = 1e-9,
                  max_iter: int = 50, t0: Optional[np.ndarray] = None) -> CoupledReport:
    """Solve the coupled equation; the report's residual is the full 4-d residual."""
    h = _as_field(pg, h, "h")
    f = _as_field(pg, f, "f")
    _validate(pg, h, f)
    if tol <= 0:
        raise ProblemError("tol must be positive")
    a, v = reduce_to_constant(pg, f)
    if np.max(np.abs(v)) == 0.0:
        rep = _solve_constant(pg, h, a, tol, max_iter, t0)
    else:
        v_sigma = pg.fiber_mean(v)
        rep = _solve_constant(pg, _exp(v) * h, a, tol, max_iter, None if t0 is None else t0 - v_sigma)
        rep.u = rep.u + v
    rep.residual_sup = float(np.max(np.abs(coupled_residual(pg, rep.u, h, f))))
    if rep.residual_sup > tol:
        raise SolverError(f"4-d residual {rep.residual_sup:.3e} exceeds tolerance {tol:.1e}")
    return rep


def prop_kw_certificate(pg: ProductGrid, u: np.ndarray, h: np.ndarray, a: float, slack: float = 1e-8) -> Certificate:
    """Check a - L_Sigma u_Sigma >= 0 and report the empirical delta.

    delta is the largest number with delta h_Sigma <= a - L u_Sigma <= sup_S h / delta
    and delta <= e^u <= 1/delta, h_Sigma being the fibre mean of h.
    """
    h = _as_field(pg, h, "h")
    u_sigma = pg.fiber_mean(u)
    gap = a - laplacian(pg.sigma, u_sigma)
    h_sigma = pg.fiber_mean(h)
    h_sup = np.max(h, axis=(-2, -1))
    cands = [float(np.min(np.exp(u))), float(1 / np.max(np.exp(u)))]
    pos = h_sigma > 0
    if np.any(pos):
        cands.append(float(np.min(gap[pos] / h_sigma[pos])))
    pos = gap > 0
    if np.any(pos):
        cands.append(float(np.min(h_sup[pos] / gap[pos])))
    delta = min(cands)
    passed = bool(np.min(gap) >= -slack and delta > 0)
    return Certificate(passed, delta, float(np.min(gap)))

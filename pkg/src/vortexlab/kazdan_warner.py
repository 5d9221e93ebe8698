"""Kazdan-Warner solvers on a discretized flat torus.

Three problems share one batched damped-Newton core:

* full:        L u + sum_l l e^{l u} h_l = f         (L = d^*d, 5-point stencil)
* mean:        L u + e^u h = avg(e^u h),  mean(u) = t
* fibre map:   t -> f_h(t) = avg(e^u h) for the mean problem, with derivative

The Jacobians are symmetric positive definite (on mean-zero fields for the
mean problem), so each Newton step is a preconditioned CG solve with the
spectral inverse of L + const as preconditioner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .krylov import SolverError, pcg
from .surface import TorusGrid, irfft2, laplacian, laplacian_symbol, rfft2

FULL = "full"
MEAN = "mean"

ARMIJO_C = 1e-4
MIN_STEP = 2.0**-20
EPS0 = 1e-8


class ProblemError(ValueError):
    """The problem violates a hypothesis (h < 0, int h <= 0, int f <= 0, ...)."""


@dataclass
class BoundCheck:
    passed: bool
    lower: float
    upper: float
    u_min: float
    u_max: float


@dataclass
class SolveReport:
    u: np.ndarray
    residual_sup: float
    newton_iters: int
    converged: bool
    history: List[float] = field(default_factory=list)
    cg_iters: int = 0
    bound_check: Optional[BoundCheck] = None
    cS_estimate: Optional[float] = None
    uniqueness_gap: Optional[float] = None

    def summary(self) -> dict:
        out = {
            "residual_sup": self.residual_sup,
            "newton_iters": self.newton_iters,
            "converged": self.converged,
            "history": list(self.history),
            "cg_iters": self.cg_iters,
        }
        if self.bound_check is not None:
            out["bound_check"] = {
                "passed": self.bound_check.passed,
                "lower": self.bound_check.lower,
                "upper": self.bound_check.upper,
                "u_min": self.bound_check.u_min,
                "u_max": self.bound_check.u_max,
            }
        if self.cS_estimate is not None:
            out["cS_estimate"] = self.cS_estimate
        if self.uniqueness_gap is not None:
            out["uniqueness_gap"] = self.uniqueness_gap
        return out


@dataclass
class KWProblem:
    grid: TorusGrid
    h: np.ndarray
    f: Union[np.ndarray, float] = 1.0
    mode: str = FULL
    t: float = 0.0

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        if np.ndim(self.f) == 0:
            self.f = np.full(self.grid.shape, float(self.f))
        self.f = np.asarray(self.f, dtype=float)
        if self.mode not in (FULL, MEAN):
            raise ProblemError(f"mode must be {FULL!r} or {MEAN!r}")

    def validate(self) -> None:
        _check_field(self.grid, self.h, "h")
        _check_nonneg(self.grid, self.h, "h", need_positive_integral=self.mode == FULL)
        if self.mode == FULL:
            _check_field(self.grid, self.f, "f")
            if self.grid.integrate(self.f) <= 0:
                raise ProblemError("hypothesis violated: integral of f <= 0")


def _check_field(grid: TorusGrid, a: np.ndarray, name: str) -> None:
    if a.shape[-2:] != grid.shape:
        raise ProblemError(f"{name} has shape {a.shape}, grid is {grid.shape}")
    if not np.all(np.isfinite(a)):
        raise ProblemError(f"{name} has non-finite entries")


def _check_nonneg(grid: TorusGrid, h: np.ndarray, name: str, need_positive_integral: bool = True) -> None:
    if np.any(h < 0):
        raise ProblemError(f"hypothesis violated: {name} < 0 somewhere (min {float(np.min(h)):.3e})")
    if need_positive_integral and np.any(grid.integrate(h) <= 0):
        raise ProblemError(f"hypothesis violated: integral of {name} <= 0")


# ---------------------------------------------------------------------------
# spectral helpers
# ---------------------------------------------------------------------------


def shifted_inverse(grid: TorusGrid, shift: np.ndarray, project: bool = False) -> Callable[[np.ndarray], np.ndarray]:
    """r -> (L + shift)^{-1} r, batched; ``shift`` has the batch shape.

    With ``project`` the zero mode is dropped (inverse of L on mean-zero
    fields, regularized by the shift on the others).
    """
    sym = laplacian_symbol(grid)
    shift = np.asarray(shift, dtype=float)
    denom = sym + shift[..., None, None]
    if project:
        denom = denom.copy()
        denom[..., 0, 0] = 1.0
    else:
        denom = np.where(denom > 0, denom, 1.0)

    def apply(r):
        rh = rfft2(r) / denom
        if project:
            rh[..., 0, 0] = 0.0
        return irfft2(rh, grid.shape)

    return apply


def _mean(a: np.ndarray) -> np.ndarray:
    return np.mean(a, axis=(-2, -1))


def _demean(a: np.ndarray) -> np.ndarray:
    return a - _mean(a)[..., None, None]


def _sup(a: np.ndarray) -> np.ndarray:
    return np.max(np.abs(a), axis=(-2, -1))


def _l2(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(a * a, axis=(-2, -1)))


def _exp(u: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(np.minimum(u, 700.0))


# ---------------------------------------------------------------------------
# batched damped Newton
# ---------------------------------------------------------------------------


@dataclass
class _NewtonOut:
    u: np.ndarray
    res_sup: np.ndarray
    iters: int
    history: List[np.ndarray]
    cg_iters: int
    converged: bool


def _damped_newton(residual, step, u0, tol, max_iter, batch_shape) -> _NewtonOut:
    """Newton with per-member Armijo backtracking on the l2 residual.

    ``residual(u)`` returns F(u); ``step(u, F)`` returns (delta, cg_iters)
    solving J delta = -F.
    """
    u = u0.copy()
    F = residual(u)
    sup = _sup(F)
    history = [sup.copy()]
    cg_total = 0
    it = 0
    while np.any(sup > tol) and it < max_iter:
        active = sup > tol
        delta, nc = step(u, F)
        cg_total += nc
        delta = np.where(active[..., None, None], delta, 0.0)
        n0 = _l2(F)
        alpha = np.ones(batch_shape)
        accepted = ~active
        u_new, F_new = u.copy(), F.copy()
        while True:
            trial = u + alpha[..., None, None] * delta
            Ft = residual(trial)
            nt = _l2(Ft)
            ok = (~accepted) & np.isfinite(nt) & (nt <= (1 - ARMIJO_C * alpha) * n0)
            sel = ok[..., None, None]
            u_new = np.where(sel, trial, u_new)
            F_new = np.where(sel, Ft, F_new)
            accepted = accepted | ok
            if np.all(accepted):
                break
            alpha = np.where(accepted, alpha, alpha / 2)
            if np.any(alpha[~accepted] < MIN_STEP):
                # no sufficient decrease: take the smallest step if it still helps,
                # otherwise stop (residual is at the rounding floor)
                stuck = (~accepted) & (alpha < MIN_STEP)
                better = stuck & np.isfinite(nt) & (nt < n0)
                sel = better[..., None, None]
                u_new = np.where(sel, trial, u_new)
                F_new = np.where(sel, Ft, F_new)
                accepted = accepted | stuck
                if np.all(accepted):
                    break
        it += 1
        progressed = np.any(u_new != u)
        u, F = u_new, F_new
        sup = _sup(F)
        history.append(sup.copy())
        if not progressed:
            break
    return _NewtonOut(u, sup, it, history, cg_total, bool(np.all(sup <= tol)))


def _cg_tol(F: np.ndarray) -> float:
    return 1e-13


# ---------------------------------------------------------------------------
# full problem (single or multiple weights)
# ---------------------------------------------------------------------------


def kw_residual(grid: TorusGrid, u: np.ndarray, hs: Sequence[np.ndarray], weights: Sequence[int], f: np.ndarray) -> np.ndarray:
    out = laplacian(grid, u) - f
    for l, h in zip(weights, hs):
        out = out + l * _exp(l * u) * h
    return out


def constant_guess(grid: TorusGrid, hs, weights, f) -> float:
    """Constant c with sum_l l e^{l c} int h_l = int f (log(int f/int h) for one weight)."""
    F = float(grid.integrate(f))
    Hs = [float(grid.integrate(h)) for h in hs]
    if len(weights) == 1 and weights[0] == 1:
        return float(np.log(max(F / Hs[0], EPS0)))
    target = max(F, EPS0 * sum(Hs))

    def g(c):
        return sum(l * np.exp(l * c) * H for l, H in zip(weights, Hs)) - target

    lo, hi = -50.0, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def solve_kw_multiweight(
    grid: TorusGrid,
    hs: Sequence[np.ndarray],
    weights: Sequence[int],
    f: Union[np.ndarray, float],
    tol: float = 1e-10,
    u0: Optional[np.ndarray] = None,
    max_iter: int = 100,
) -> SolveReport:
    """Solve L u + sum_l l e^{l u} h_l = f by damped Newton."""
    if tol <= 0:
        raise ProblemError("tol must be positive")
    weights = [int(l) for l in weights]
    if len(weights) != len(hs) or not weights:
        raise ProblemError("need one weight per h")
    if any(l < 1 for l in weights):
        raise ProblemError("weights must be positive integers")
    hs = [np.asarray(h, dtype=float) for h in hs]
    for h in hs:
        _check_field(grid, h, "h")
        _check_nonneg(grid, h, "h", need_positive_integral=False)
    if sum(float(grid.integrate(h)) for h in hs) <= 0:
        raise ProblemError("hypothesis violated: integral of h <= 0")
    f = np.full(grid.shape, float(f)) if np.ndim(f) == 0 else np.asarray(f, dtype=float)
    _check_field(grid, f, "f")
    if grid.integrate(f) <= 0:
        raise ProblemError("hypothesis violated: integral of f <= 0")

    if u0 is None:
        u0 = np.full(grid.shape, constant_guess(grid, hs, weights, f))

    def residual(u):
        return kw_residual(grid, u, hs, weights, f)

    def step(u, F):
        diag = sum(l * l * _exp(l * u) * h for l, h in zip(weights, hs))
        pre = shifted_inverse(grid, np.mean(diag))
        res = pcg(lambda x: laplacian(grid, x) + diag * x, -F, pre, tol=_cg_tol(F), maxiter=2000)
        return res.x, res.iterations

    out = _damped_newton(residual, step, np.asarray(u0, dtype=float), tol, max_iter, ())
    if not out.converged:
        raise SolverError(f"Kazdan-Warner Newton did not converge: residual {float(out.res_sup):.3e} after {out.iters} steps")
    return SolveReport(out.u, float(out.res_sup), out.iters, True, [float(x) for x in out.history], out.cg_iters)


def solve_kw(p: KWProblem, tol: float = 1e-10, u0: Optional[np.ndarray] = None, max_iter: int = 100,
             certify: bool = True, verify_uniqueness: bool = False) -> SolveReport:
    """Solve the full or mean-constrained problem described by ``p``.

    ``certify`` attaches the a-priori envelope check (when min f > 0) and the
    c_S estimate; ``verify_uniqueness`` re-solves from a start shifted by +3
    and records the sup-norm gap.
    """
    p.validate()
    if tol <= 0:
        raise ProblemError("tol must be positive")
    if p.mode == MEAN:
        return solve_kws(p.grid, p.h, p.t, tol, v0=None if u0 is None else u0 - np.mean(u0), max_iter=max_iter)
    rep = solve_kw_multiweight(p.grid, [p.h], [1], p.f, tol, u0, max_iter)
    if certify:
        cS = compute_cS(p.grid)
        rep.cS_estimate = cS
        a, A = float(np.min(p.f)), float(np.max(p.f))
        if a > 0:
            rep.bound_check = kw0_bounds(rep.u, p.h, a, A, 0.0, cS)
    if verify_uniqueness:
        other = solve_kw_multiweight(p.grid, [p.h], [1], p.f, tol, rep.u * 0 + np.mean(rep.u) + 3.0, max_iter)
        rep.uniqueness_gap = float(np.max(np.abs(other.u - rep.u)))
    return rep


# ---------------------------------------------------------------------------
# mean-constrained problem (batched)
# ---------------------------------------------------------------------------


def kws_residual(grid: TorusGrid, u: np.ndarray, h: np.ndarray) -> np.ndarray:
    e = _exp(u) * h
    return laplacian(grid, u) + e - _mean(e)[..., None, None]


def solve_kws_batch(grid: TorusGrid, h: np.ndarray, t: np.ndarray, tol: float = 1e-10,
                    v0: Optional[np.ndarray] = None, max_iter: int = 100) -> _NewtonOut:
    """Solve the mean problem for a stack of h (shape B x nx x ny) and means t (shape B).

    Unknowns are u = t + v with mean(v) = 0; every member keeps its mean
    exactly because Newton updates are projected.
    """
    h = np.asarray(h, dtype=float)
    t = np.asarray(t, dtype=float)
    batch = h.shape[:-2]
    t = np.broadcast_to(t, batch)
    v = np.zeros(h.shape) if v0 is None else _demean(np.asarray(v0, dtype=float))

    def residual(v):
        return kws_residual(grid, t[..., None, None] + v, h)

    def step(v, F):
        D = _exp(t[..., None, None] + v) * h
        shift = _mean(D)
        pre = shifted_inverse(grid, shift, project=True)

        def op(x):
            return _demean(laplacian(grid, x) + D * x)

        res = pcg(op, -_demean(F), pre, tol=_cg_tol(F), maxiter=2000)
        return _demean(res.x), res.iterations

    out = _damped_newton(residual, step, v, tol, max_iter, batch)
    out.u = t[..., None, None] + out.u
    return out


def solve_kws(grid: TorusGrid, h: np.ndarray, t: float, tol: float = 1e-10,
              v0: Optional[np.ndarray] = None, max_iter: int = 100) -> SolveReport:
    h = np.asarray(h, dtype=float)
    _check_field(grid, h, "h")
    _check_nonneg(grid, h, "h", need_positive_integral=False)
    out = solve_kws_batch(grid, h, np.asarray(float(t)), tol, v0, max_iter)
    if not out.converged:
        raise SolverError(f"KWS Newton did not converge: residual {float(out.res_sup):.3e}")
    return SolveReport(out.u, float(out.res_sup), out.iters, True, [float(x) for x in out.history], out.cg_iters)


def fiber_derivative_batch(grid: TorusGrid, u: np.ndarray, h: np.ndarray) -> np.ndarray:
    """d/dt avg(e^u h) along the solution branch of the mean problem.

    With u' = 1 + eta, eta mean-zero solving P(L + D) eta = -P(D), the slope
    is avg(D (1 + eta)), D = e^u h.
    """
    D = _exp(u) * h
    shift = _mean(D)
    pre = shifted_inverse(grid, shift, project=True)

    def op(x):
        return _demean(laplacian(grid, x) + D * x)

    rhs = -_demean(D)
    res = pcg(op, rhs, pre, tol=1e-13, maxiter=2000)
    eta = _demean(res.x)
    return _mean(D * (1 + eta))


def fiber_response(grid: TorusGrid, h: np.ndarray, t: float, tol: float = 1e-10, with_derivative: bool = False):
    """f_h(t) = avg(e^u h) where u solves the mean problem with mean t."""
    rep = solve_kws(grid, h, t, tol)
    val = float(np.mean(_exp(rep.u) * h))
    if not with_derivative:
        return val
    return val, float(fiber_derivative_batch(grid, rep.u, np.asarray(h, dtype=float)))


# ---------------------------------------------------------------------------
# a-priori bounds
# ---------------------------------------------------------------------------


def green_column(grid: TorusGrid) -> np.ndarray:
    """Discrete Green's function of L on mean-zero fields, centred at node (0, 0)."""
    delta = np.zeros(grid.shape)
    delta[0, 0] = 1.0
    return shifted_inverse(grid, np.asarray(0.0), project=True)(delta - delta.mean())


def compute_cS(grid: TorusGrid) -> float:
    """2 x max row sum of |G|, G the mean-zero inverse of L (circulant, so every row agrees).

    For mean-zero v, v = G L v, hence 2 ||v||_inf <= c_S ||L v||_inf.
    """
    return 2.0 * float(np.sum(np.abs(green_column(grid))))


def kw0_bounds(u: np.ndarray, h: np.ndarray, a: float, A: float, C: float, cS: float, slack: float = 1e-9) -> BoundCheck:
    """Check log(a/|h|_inf) <= u <= log(A/h0) + (A/h0)(C + c_S |h|_inf) pointwise."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ProblemError("h must be nonnegative")
    h0 = float(np.mean(h))
    if h0 <= 0:
        raise ProblemError("mean of h must be positive")
    if not 0 < a <= A:
        raise ProblemError("need 0 < a <= A")
    hinf = float(np.max(h))
    lower = float(np.log(a / hinf))
    upper = float(np.log(A / h0) + (A / h0) * (C + cS * hinf))
    umin, umax = float(np.min(u)), float(np.max(u))
    passed = umin >= lower - slack and umax <= upper + slack
    return BoundCheck(bool(passed), lower, upper, umin, umax)

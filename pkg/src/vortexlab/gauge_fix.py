"""Coulomb gauge fixing on lattice connections by Newton iteration.

Given A near A0, find g with d_{A0}^*(g^*A - A0) = 0.  Each step solves for
xi, sets g = exp(xi) and replaces A by g^*A.  Two linearizations are offered:

* ``frozen``: solve d_{A0}^* d_{A0} xi = -r with deflated CG.  This is the
  iteration of the existence proof; its residuals contract linearly at a
  rate proportional to |A - A0|.
* ``exact``: solve J xi = -r where J xi = d_{A0}^* psi(ad_{hA}) d_A xi is the
  true derivative of the lattice action at the current iterate.  GMRES with
  the frozen operator's spectral inverse as preconditioner; residuals
  contract quadratically.

Lattice gauge action: the link U = exp(h A) becomes g(x)^{-1} U g(x+e).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import lie
from .kazdan_warner import shifted_inverse
from .krylov import SolverError, deflated_pcg, orthonormalize
from .lie import SU2, U1
from .surface import LatticeConnection, TorusGrid, check_same, covariant_d, covariant_d_star, laplacian_symbol

EXACT = "exact"
FROZEN = "frozen"


@dataclass
class GaugeTransform:
    """Pointwise group elements; ``log`` keeps exponential coordinates when known."""

    grid: TorusGrid
    group: str
    values: np.ndarray
    log: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        expected = self.grid.shape + lie.lie_shape(self.group)
        if self.values.shape != expected:
            raise ValueError(f"gauge transform must have shape {expected}")

    @classmethod
    def identity(cls, grid: TorusGrid, group: str) -> "GaugeTransform":
        zero = np.zeros(grid.shape + lie.lie_shape(group), complex)
        return cls(grid, group, lie.identity(group, grid.shape), zero)

    @classmethod
    def from_algebra(cls, grid: TorusGrid, group: str, xi: np.ndarray) -> "GaugeTransform":
        return cls(grid, group, lie.exp(group, xi), np.asarray(xi, dtype=complex))

    def __mul__(self, other: "GaugeTransform") -> "GaugeTransform":
        if self.group != other.group or self.grid != other.grid:
            raise ValueError("gauge transforms on different groups or grids")
        if self.group == U1:
            log = None if self.log is None or other.log is None else self.log + other.log
            return GaugeTransform(self.grid, U1, self.values * other.values, log)
        return GaugeTransform(self.grid, SU2, self.values @ other.values)

    def constraint_defect(self) -> float:
        """max of ||g| - 1| (u1) or of |g^* g - 1| and |det g - 1| (su2)."""
        if self.group == U1:
            return float(np.max(np.abs(np.abs(self.values) - 1)))
        eye = np.eye(2)
        unit = np.max(np.abs(lie.dagger(self.values) @ self.values - eye))
        det = np.max(np.abs(np.linalg.det(self.values) - 1))
        return float(max(unit, det))


def gauge_apply(g: GaugeTransform, A: LatticeConnection) -> LatticeConnection:
    """g^*A = g^{-1} dg + g^{-1} A g on the lattice."""
    if g.group != A.group:
        raise ValueError(f"group mismatch: {g.group} vs {A.group}")
    if g.grid != A.grid:
        raise ValueError("grid mismatch")
    grid = A.grid
    hs = (grid.hx, grid.hy)
    if A.group == U1:
        if g.log is not None:
            chi = g.log
            dA = [(np.roll(chi, -1, axis=k) - chi) / hs[k] for k in (0, 1)]
        else:
            dA = [1j * np.angle(np.conj(g.values) * np.roll(g.values, -1, axis=k)) / hs[k] for k in (0, 1)]
        return LatticeConnection(grid, U1, A.As + dA[0], A.At + dA[1], A.degree)
    comps = []
    for k, comp in enumerate((A.As, A.At)):
        U = lie.exp(SU2, hs[k] * comp)
        Up = lie.dagger(g.values) @ U @ np.roll(g.values, -1, axis=k)
        comps.append(lie.log(SU2, Up) / hs[k])
    return LatticeConnection(grid, SU2, comps[0], comps[1], 0)


def slice_vector(A: LatticeConnection, A0: LatticeConnection) -> np.ndarray:
    check_same(A, A0)
    return covariant_d_star(A0, A - A0)


def slice_residual(A: LatticeConnection, A0: LatticeConnection) -> float:
    """sup-norm of d_{A0}^*(A - A0)."""
    r = slice_vector(A, A0)
    return float(np.max(np.sqrt(lie.norm2(A.group, r))))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def lq_norm(grid: TorusGrid, group: str, a, q: float = 4.0) -> float:
    """Lattice l^q norm of a 1-form: (sum |a|^q h^2)^(1/q)."""
    dens = np.sqrt(lie.norm2(group, a[0]) + lie.norm2(group, a[1]))
    return float((np.sum(dens**q) * grid.cell_area) ** (1 / q))


def w1p_norm(grid: TorusGrid, group: str, a, p: float = 2.0) -> float:
    """l^p norm of a 1-form plus its forward-difference gradient."""
    tot = 0.0
    for comp in a:
        tot += lie.norm2(group, comp) ** (p / 2)
        for k, h in ((0, grid.hx), (1, grid.hy)):
            tot += lie.norm2(group, (np.roll(comp, -1, axis=k) - comp) / h) ** (p / 2)
    return float((np.sum(tot) * grid.cell_area) ** (1 / p))


def sup_norm(group: str, a) -> float:
    return float(max(np.max(np.sqrt(lie.norm2(group, c))) for c in a))


# ---------------------------------------------------------------------------
# linear algebra on Lie-algebra fields
# ---------------------------------------------------------------------------


def _to_real(group: str, x: np.ndarray) -> np.ndarray:
    """Fields -> real component arrays with the component axis first."""
    if group == U1:
        return np.imag(x)[None]
    return np.moveaxis(lie.to_coords(x), -1, 0)


def _from_real(group: str, c: np.ndarray) -> np.ndarray:
    if group == U1:
        return 1j * c[0]
    return lie.from_coords(np.moveaxis(c, 0, -1))


def _ncomp(group: str) -> int:
    return 1 if group == U1 else 3


def covariant_kernel(A0: LatticeConnection, tol: float = 1e-10) -> List[np.ndarray]:
    """Orthonormal basis (real component arrays) of fields with d_{A0} xi = 0.

    A covariantly constant field is fixed by its value at node (0, 0) and is
    obtained by parallel transport along x and then y; candidates that fail
    d_{A0} xi = 0 (non-trivial holonomy) are dropped.
    """
    grid, group = A0.grid, A0.group
    if group == U1:
        return orthonormalize([np.ones((1,) + grid.shape)], 3)
    Us, Ut = A0.links()
    P = np.zeros(grid.shape + (2, 2), complex)
    P[0, 0] = np.eye(2)
    for i in range(1, grid.nx):
        P[i, 0] = P[i - 1, 0] @ Us[i - 1, 0]
    for j in range(1, grid.ny):
        P[:, j] = P[:, j - 1] @ Ut[:, j - 1]
    cands = [lie.dagger(P) @ b @ P for b in lie.SU2_BASIS]
    D = [covariant_d(A0, c) for c in cands]
    M = np.array([[sum(np.sum(lie.inner(SU2, Da[k], Db[k])) for k in (0, 1)) for Db in D] for Da in D])
    w, V = np.linalg.eigh(M)
    scale = max(1.0, float(np.max(np.abs(w))))
    basis = []
    for k in range(3):
        if w[k] <= tol * scale:
            xi = sum(V[a, k] * cands[a] for a in range(3))
            basis.append(_to_real(SU2, xi))
    return orthonormalize(basis, 3)


def _spectral_preconditioner(grid: TorusGrid):
    sym = laplacian_symbol(grid)
    lam1 = float(np.min(sym[sym > 1e-12]))
    inv = shifted_inverse(grid, np.asarray(1e-2 * lam1))
    return inv


def frozen_operator(A0: LatticeConnection):
    def apply(c):
        xi = _from_real(A0.group, c)
        return _to_real(A0.group, covariant_d_star(A0, covariant_d(A0, xi)))

    return apply


def solve_frozen(A0: LatticeConnection, rhs: np.ndarray, kernel, tol: float = 1e-13) -> Tuple[np.ndarray, int]:
    """d_{A0}^* d_{A0} xi = rhs on the complement of the kernel (deflated CG)."""
    pre = _spectral_preconditioner(A0.grid)
    res = deflated_pcg(frozen_operator(A0), rhs, kernel, pre, tol=tol, maxiter=5000, field_ndim=3)
    return res.x, res.iterations


def exact_operator(A0: LatticeConnection, A: LatticeConnection):
    """xi -> d_{A0}^* psi(ad_{hA}) d_A xi, the derivative of xi -> d_{A0}^*(exp(xi)^*A - A0)."""
    grid, group = A.grid, A.group
    hs = (grid.hx, grid.hy)
    comps = (A.As, A.At)

    def apply(c):
        xi = _from_real(group, c)
        dA = covariant_d(A, xi)
        lin = tuple(lie.dexp_inv_right(group, hs[k] * comps[k], dA[k]) for k in (0, 1))
        return _to_real(group, covariant_d_star(A0, lin))

    return apply


def _project(c: np.ndarray, kernel) -> np.ndarray:
    for q in kernel:
        c = c - np.sum(q * c) * q
    return c


def solve_exact(A0: LatticeConnection, A: LatticeConnection, rhs: np.ndarray, kernel, tol: float = 1e-13) -> Tuple[np.ndarray, int]:
    """GMRES on the complement of the A0 kernel, right-preconditioned by the flat spectral inverse."""
    shape = rhs.shape
    n = rhs.size
    op = exact_operator(A0, A)
    pre = _spectral_preconditioner(A0.grid)

    def P(v):
        return _project(v.reshape(shape), kernel)

    def matvec(v):
        return P(op(P(v))).ravel()

    def prec(v):
        return P(pre(P(v))).ravel()

    count = [0]

    def cb(_):
        count[0] += 1

    b = P(rhs).ravel()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0:
        return np.zeros(shape), 0
    x, info = gmres(
        LinearOperator((n, n), matvec=matvec, dtype=float),
        b,
        M=LinearOperator((n, n), matvec=prec, dtype=float),
        rtol=tol,
        atol=0.0,
        restart=200,
        maxiter=50,
        callback=cb,
        callback_type="pr_norm",
    )
    if info != 0:
        rel = np.linalg.norm(matvec(x) - b) / bnorm
        if rel > 1e-8:
            raise SolverError(f"GMRES failed (info {info}, relative residual {rel:.3e})")
    return P(x), count[0]


# ---------------------------------------------------------------------------
# iteration
# ---------------------------------------------------------------------------


@dataclass
class IterationTrace:
    residual_sup: List[float] = field(default_factory=list)
    residual_l2: List[float] = field(default_factory=list)
    dist_sup: List[float] = field(default_factory=list)
    dist_lq: List[float] = field(default_factory=list)
    dist_w1p: List[float] = field(default_factory=list)
    linear_iters: List[int] = field(default_factory=list)
    kernel_dim: int = 0
    linearization: str = EXACT

    @property
    def steps(self) -> int:
        return len(self.residual_sup) - 1

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _record(trace: IterationTrace, A: LatticeConnection, A0: LatticeConnection, q: float, p: float) -> float:
    grid, group = A.grid, A.group
    r = slice_vector(A, A0)
    rs = float(np.max(np.sqrt(lie.norm2(group, r))))
    diff = A - A0
    trace.residual_sup.append(rs)
    trace.residual_l2.append(float(np.sqrt(np.sum(lie.norm2(group, r)) * grid.cell_area)))
    trace.dist_sup.append(sup_norm(group, diff))
    trace.dist_lq.append(lq_norm(grid, group, diff, q))
    trace.dist_w1p.append(w1p_norm(grid, group, diff, p))
    return rs


def coulomb_fix(
    A: LatticeConnection,
    A0: LatticeConnection,
    tol: float = 1e-10,
    max_iter: int = 12,
    linearization: str = EXACT,
    q: float = 4.0,
    p: float = 2.0,
    divergence_factor: float = 1e3,
) -> Tuple[GaugeTransform, LatticeConnection, IterationTrace]:
    """Newton iteration for the Coulomb slice condition.

    Returns the accumulated gauge transform g, A_fixed = g^*A and the trace.
    """
    check_same(A, A0)
    if A.group == U1 and A.degree != A0.degree:
        raise ValueError("connections on different bundles")
    if linearization not in (EXACT, FROZEN):
        raise ValueError(f"linearization must be {EXACT!r} or {FROZEN!r}")
    grid, group = A.grid, A.group
    kernel = covariant_kernel(A0)
    trace = IterationTrace(kernel_dim=len(kernel), linearization=linearization)
    g_total = GaugeTransform.identity(grid, group)
    cur = A
    rs = _record(trace, cur, A0, q, p)
    r0 = rs
    while rs > tol:
        if trace.steps >= max_iter:
            raise SolverError(f"Coulomb gauge iteration did not converge in {max_iter} steps (residual {rs:.3e})")
        rhs = -_to_real(group, slice_vector(cur, A0))
        if linearization == FROZEN or group == U1:
            # for u1 the frozen and exact linearizations coincide
            c, nit = solve_frozen(A0, rhs, kernel)
        else:
            c, nit = solve_exact(A0, cur, rhs, kernel)
        trace.linear_iters.append(int(nit))
        g = GaugeTransform.from_algebra(grid, group, _from_real(group, c))
        cur = gauge_apply(g, cur)
        g_total = g_total * g
        rs = _record(trace, cur, A0, q, p)
        if not np.isfinite(rs) or rs > divergence_factor * max(r0, tol):
            raise SolverError(f"Coulomb gauge iteration diverged (residual {rs:.3e})")
    return g_total, cur, trace


def contraction_exponent(traces: Sequence[IterationTrace], floor: float = 1e-13) -> float:
    """Pooled least-squares slope of log r_{k+1} against log r_k.

    Pairs whose successor is at the rounding floor are excluded.
    """
    xs, ys = [], []
    for t in traces:
        r = t.residual_sup
        for a, b in zip(r[:-1], r[1:]):
            if b > floor and a > floor:
                xs.append(np.log(a))
                ys.append(np.log(b))
    if len(xs) < 2:
        raise ValueError("not enough residual pairs above the floor to fit an exponent")
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def random_perturbation(grid: TorusGrid, group: str, rng: np.random.Generator, size: float, modes: int = 2):
    """Smooth random Lie-algebra 1-form with sup norm ``size``."""
    X, Y = grid.mesh()
    ncomp = _ncomp(group)
    comps = []
    for _ in range(2):
        c = np.zeros((ncomp,) + grid.shape)
        for a in range(ncomp):
            for kx in range(-modes, modes + 1):
                for ky in range(-modes, modes + 1):
                    amp = rng.standard_normal(2) / (1 + kx * kx + ky * ky)
                    ph = 2 * np.pi * (kx * X / grid.lx + ky * Y / grid.ly)
                    c[a] += amp[0] * np.cos(ph) + amp[1] * np.sin(ph)
        comps.append(_from_real(group, c))
    scale = size / sup_norm(group, comps)
    return comps[0] * scale, comps[1] * scale

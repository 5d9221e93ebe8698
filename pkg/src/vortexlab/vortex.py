"""Abelian vortex equations for weighted circle actions on C^n over a flat torus.

Real conventions.  Everything u(1)-valued is stored after factoring out i:

    A = i a,   F_A = i f  with  f = d_s a_t - d_t a_s,
    mu(x) = (1/2) sum_l l |x_l|^2    (the moment map is -i times this),
    moment equation   -f + mu(u) = tau.

Section l has charge l, so D u_l = d u_l + i l a u_l.  On the degree-d bundle
int f = -2 pi d, so integrating the moment equation gives
sum_l l int |u_l|^2 / 2 = tau Vol - 2 pi d, which forces tau Vol > 2 pi d.

Discretization.  Sections live on nodes, a on links, f on plaquettes.
Link transports are exp(i l h a).  The energy uses forward link differences.
The d-bar operator uses central covariant differences at nodes.  With this
layout every gauge-invariant quantity is exactly invariant under lattice
gauge transformations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .kazdan_warner import ProblemError, solve_kw_multiweight
from .surface import (
    LatticeConnection,
    TorusGrid,
    curvature,
    nodes_to_plaquettes,
    plaquette_to_nodes,
    poisson_solve,
    reference_connection,
    section_shift,
)

THETA_TERMS = 8


# ---------------------------------------------------------------------------
# linear actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearAction:
    weights: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(l) for l in self.weights))
        if not self.weights or any(l < 1 for l in self.weights):
            raise ProblemError("weights must be positive integers")

    @property
    def n(self) -> int:
        return len(self.weights)

    def act(self, theta: float, x: np.ndarray) -> np.ndarray:
        """e^{i theta} . x = (e^{i l theta} x_l)."""
        x = np.asarray(x, dtype=complex)
        return np.array([np.exp(1j * l * theta) * xl for l, xl in zip(self.weights, x)])


def moment_map(action: LinearAction, x) -> np.ndarray:
    """(1/2) sum_l l |x_l|^2; ``x`` has the coordinate index first."""
    x = np.asarray(x)
    if len(x) != action.n:
        raise ProblemError(f"expected {action.n} coordinates, got {len(x)}")
    return 0.5 * sum(l * np.abs(xl) ** 2 for l, xl in zip(action.weights, x))


def convexity_witness(action: LinearAction, x, tau: float) -> np.ndarray:
    """<mu(x), mu(x) - tau>, nonnegative once |mu(x)| >= |tau|."""
    m = moment_map(action, x)
    return m * (m - tau)


# ---------------------------------------------------------------------------
# Hamiltonian perturbations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantField:
    value: float = 1.0

    def __call__(self, X, Y):
        return np.full(np.broadcast(X, Y).shape, float(self.value))

    def dx(self, X, Y):
        return np.zeros(np.broadcast(X, Y).shape)

    def dy(self, X, Y):
        return np.zeros(np.broadcast(X, Y).shape)


@dataclass(frozen=True)
class PolyTerm:
    """base(s, t) * prod_l r_l^{e_l} with r_l = |x_l|^2."""

    base: object
    exponents: Tuple[int, ...]

    def monomial(self, r: Sequence[np.ndarray]) -> np.ndarray:
        out = 1.0
        for rl, e in zip(r, self.exponents):
            out = out * rl**e
        return out

    def d_monomial(self, r: Sequence[np.ndarray], k: int) -> np.ndarray:
        e = self.exponents[k]
        if e == 0:
            return np.zeros(np.shape(r[k]))
        out = e * r[k] ** (e - 1)
        for j, (rl, ej) in enumerate(zip(r, self.exponents)):
            if j != k:
                out = out * rl**ej
        return out


@dataclass(frozen=True)
class HamiltonianPerturbation:
    """H = F ds + G dt with circle-invariant F, G polynomial in r_l = |x_l|^2."""

    F: Tuple[PolyTerm, ...] = ()
    G: Tuple[PolyTerm, ...] = ()

    @staticmethod
    def _eval(terms, X, Y, r):
        out = np.zeros(np.broadcast(X, Y, *r).shape)
        for t in terms:
            out = out + t.base(X, Y) * t.monomial(r)
        return out

    @staticmethod
    def _grad(terms, X, Y, r, k):
        out = np.zeros(np.broadcast(X, Y, *r).shape)
        for t in terms:
            out = out + t.base(X, Y) * t.d_monomial(r, k)
        return out

    def values(self, X, Y, u: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        r = [np.abs(ul) ** 2 for ul in u]
        return self._eval(self.F, X, Y, r), self._eval(self.G, X, Y, r)

    def vector_fields(self, X, Y, u: Sequence[np.ndarray]):
        """X_F and X_G at u: (X_F)_l = -2i (dF/dr_l) u_l, so omega(X_F, .) = dF."""
        r = [np.abs(ul) ** 2 for ul in u]
        xf = [-2j * self._grad(self.F, X, Y, r, k) * uk for k, uk in enumerate(u)]
        xg = [-2j * self._grad(self.G, X, Y, r, k) * uk for k, uk in enumerate(u)]
        return xf, xg

    def curvature(self, X, Y, r: Sequence[np.ndarray]) -> np.ndarray:
        """Omega_H = d_s G - d_t F; the bracket {F, G} vanishes for functions of r."""
        out = np.zeros(np.broadcast(X, Y, *r).shape)
        for t in self.G:
            out = out + t.base.dx(X, Y) * t.monomial(r)
        for t in self.F:
            out = out - t.base.dy(X, Y) * t.monomial(r)
        return out

    def is_zero(self) -> bool:
        return not self.F and not self.G

    def invariance_defect(self, action: LinearAction, rng: np.random.Generator, samples: int = 20) -> float:
        """Max change of F, G under random circle rotations at random points."""
        worst = 0.0
        for _ in range(samples):
            x = rng.standard_normal(action.n) + 1j * rng.standard_normal(action.n)
            s, t, th = rng.uniform(0, 1, 3) * np.array([1, 1, 2 * np.pi])
            a = self.values(s, t, list(x))
            b = self.values(s, t, list(action.act(th, x)))
            worst = max(worst, float(np.max(np.abs(np.array(a) - np.array(b)))))
        return worst


def hofer_norm(H: HamiltonianPerturbation, grid: TorusGrid, n: int, r_max: float = 1.0, samples: int = 17) -> float:
    """int over Sigma of sup_x Omega_H - inf_x Omega_H, x ranging over |x_l|^2 <= r_max."""
    X, Y = grid.mesh()
    axes = np.meshgrid(*([np.linspace(0.0, r_max, samples)] * n), indexing="ij")
    r = [a.reshape(-1)[:, None, None] for a in axes]
    om = H.curvature(X[None], Y[None], r)
    return float(grid.integrate(om.max(axis=0) - om.min(axis=0)))


# ---------------------------------------------------------------------------
# theta-function backgrounds
# ---------------------------------------------------------------------------


def theta(zeta: np.ndarray, T: complex, terms: int = THETA_TERMS) -> np.ndarray:
    """Jacobi theta sum_n exp(pi i n^2 T + 2 pi i n zeta), truncated at |n| <= terms."""
    zeta = np.asarray(zeta, dtype=complex)
    out = np.zeros(zeta.shape, dtype=complex)
    for n in range(-terms, terms + 1):
        out += np.exp(1j * np.pi * n * n * T + 2j * np.pi * n * zeta)
    return out


@dataclass
class Background:
    """Holomorphic pair: theta sections and the constant-curvature connection they need."""

    sections: List[np.ndarray]
    a_s_harmonic: float
    a_t_harmonic: float


def _harmonic_shift(grid: TorusGrid, zeros: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    T = 1j * grid.ly / grid.lx
    B = sum((complex(x, y) / grid.lx - (1 + T) / 2) for x, y in zeros) if zeros else 0j
    p = -2 * math.pi * B.imag / grid.ly
    q = 2 * math.pi * (B.real - round(B.real)) / grid.ly
    return p, q


def theta_section(grid: TorusGrid, zeros: Sequence[Tuple[float, float]], sx: float = 0.0, sy: float = 0.0,
                  p: Optional[float] = None, q: Optional[float] = None) -> np.ndarray:
    """Section of degree len(zeros) vanishing exactly at ``zeros`` (x, y coordinates).

    u = exp(-pi N y^2 / V) exp(-(p + i q) y) prod_k theta(zeta - a_k + (1+T)/2),
    zeta = (x + i y)/lx, T = i ly/lx.  The factor exp(-(p+iq)y) makes the
    transition exactly exp(-2 pi i N x / lx).  It is d-bar closed for the
    connection with a_s = 2 pi N y / (V l) + p / l and a_t = q / l (charge l).
    """
    N = len(zeros)
    if p is None or q is None:
        p, q = _harmonic_shift(grid, zeros)
    X, Y = grid.mesh(sx, sy)
    T = 1j * grid.ly / grid.lx
    zeta = (X + 1j * Y) / grid.lx
    out = np.exp(-math.pi * N * Y**2 / grid.volume - (p + 1j * q) * Y).astype(complex)
    for x0, y0 in zeros:
        out = out * theta(zeta - complex(x0, y0) / grid.lx + (1 + T) / 2, T)
    return out


def background(grid: TorusGrid, degree: int, weights: Sequence[int], divisors: Sequence[Sequence[Tuple[float, float]]]) -> Background:
    """Theta sections for every weight, with one common harmonic connection part."""
    if len(divisors) != len(weights):
        raise ProblemError(f"need one divisor per section ({len(weights)}), got {len(divisors)}")
    for l, D in zip(weights, divisors):
        if len(D) != degree * l:
            raise ProblemError(f"divisor size mismatch: section of weight {l} needs {degree * l} zeros, got {len(D)}")
    shifts = [_harmonic_shift(grid, D) for D in divisors]
    l0 = weights[0]
    ps = shifts[0][0] / l0
    qs = shifts[0][1] / l0
    sections = []
    for l, D, (p, q) in zip(weights, divisors, shifts):
        if abs(p / l - ps) > 1e-9 * max(1.0, abs(ps)):
            raise ProblemError("incompatible divisors: their centres of mass do not share a connection")
        # q may move by 2 pi k / ly (k integer); it must hit l * qs modulo that lattice
        k = (l * qs - q) * grid.ly / (2 * math.pi)
        if abs(k - round(k)) > 1e-9:
            raise ProblemError("incompatible divisors: their centres of mass do not share a connection")
        sections.append(theta_section(grid, D, p=l * ps, q=l * qs))
    return Background(sections, ps, qs)


# ---------------------------------------------------------------------------
# configurations
# ---------------------------------------------------------------------------


@dataclass
class VortexConfig:
    grid: TorusGrid
    degree: int
    action: LinearAction
    A: LatticeConnection
    sections: List[np.ndarray]
    H: Optional[HamiltonianPerturbation] = None

    def __post_init__(self):
        if self.A.group != "u1" or self.A.degree != self.degree:
            raise ProblemError("connection must be u1 on the degree-d bundle")
        if len(self.sections) != self.action.n:
            raise ProblemError("one section per weight required")
        self.sections = [np.asarray(u, dtype=complex) for u in self.sections]
        for u in self.sections:
            if u.shape != self.grid.shape:
                raise ProblemError("section shape does not match grid")

    @property
    def a_s(self) -> np.ndarray:
        return self.A.As.imag

    @property
    def a_t(self) -> np.ndarray:
        return self.A.At.imag

    def section_degrees(self) -> List[int]:
        return [self.degree * l for l in self.action.weights]

    def mu(self) -> np.ndarray:
        return moment_map(self.action, self.sections)


def _shift(cfg: VortexConfig, k: int, di: int, dj: int) -> np.ndarray:
    return section_shift(cfg.grid, cfg.sections[k], di, dj, cfg.degree * cfg.action.weights[k])


def link_transports(cfg: VortexConfig, k: int) -> Tuple[np.ndarray, np.ndarray]:
    l = cfg.action.weights[k]
    return np.exp(1j * l * cfg.grid.hx * cfg.a_s), np.exp(1j * l * cfg.grid.hy * cfg.a_t)


def link_derivatives(cfg: VortexConfig, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Forward covariant differences on s- and t-links."""
    g = cfg.grid
    Us, Ut = link_transports(cfg, k)
    u = cfg.sections[k]
    return (Us * _shift(cfg, k, 1, 0) - u) / g.hx, (Ut * _shift(cfg, k, 0, 1) - u) / g.hy


def link_midpoints(cfg: VortexConfig, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Section values transported to link midpoints (averages in the link frame)."""
    Us, Ut = link_transports(cfg, k)
    u = cfg.sections[k]
    return 0.5 * (Us * _shift(cfg, k, 1, 0) + u), 0.5 * (Ut * _shift(cfg, k, 0, 1) + u)


def node_derivatives(cfg: VortexConfig, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Central covariant differences at nodes."""
    g = cfg.grid
    Us, Ut = link_transports(cfg, k)
    Us_back = np.roll(Us, 1, axis=0)
    Ut_back = np.roll(Ut, 1, axis=1)
    ds = (Us * _shift(cfg, k, 1, 0) - np.conj(Us_back) * _shift(cfg, k, -1, 0)) / (2 * g.hx)
    dt = (Ut * _shift(cfg, k, 0, 1) - np.conj(Ut_back) * _shift(cfg, k, 0, -1)) / (2 * g.hy)
    return ds, dt


def field_strength(cfg: VortexConfig) -> np.ndarray:
    """Real curvature f on plaquettes (F_A = i f)."""
    return curvature(cfg.A).imag


@dataclass
class Residuals:
    dbar: List[np.ndarray]
    moment: np.ndarray

    @property
    def dbar_sup(self) -> float:
        return float(max(np.max(np.abs(r)) for r in self.dbar))

    @property
    def moment_sup(self) -> float:
        return float(np.max(np.abs(self.moment)))


def vortex_residual(cfg: VortexConfig, tau: float) -> Residuals:
    """d-bar residual per section (nodes) and -f + mu - tau (plaquettes)."""
    g = cfg.grid
    X, Y = g.mesh()
    dbar = []
    xf = xg = None
    if cfg.H is not None and not cfg.H.is_zero():
        xf, xg = cfg.H.vector_fields(X, Y, cfg.sections)
    for k in range(cfg.action.n):
        ds, dt = node_derivatives(cfg, k)
        if xf is not None:
            ds, dt = ds + xf[k], dt + xg[k]
        dbar.append(ds + 1j * dt)
    moment = -field_strength(cfg) + nodes_to_plaquettes(cfg.mu()) - tau
    return Residuals(dbar, moment)


def gauge_transform(cfg: VortexConfig, chi: np.ndarray) -> VortexConfig:
    """Act by g = exp(i chi): u_l -> g^{-l} u_l, a -> a + d chi."""
    g = cfg.grid
    chi = np.asarray(chi, dtype=float)
    da_s = (np.roll(chi, -1, axis=0) - chi) / g.hx
    da_t = (np.roll(chi, -1, axis=1) - chi) / g.hy
    A = LatticeConnection(g, "u1", cfg.A.As + 1j * da_s, cfg.A.At + 1j * da_t, cfg.degree)
    secs = [np.exp(-1j * l * chi) * u for l, u in zip(cfg.action.weights, cfg.sections)]
    return VortexConfig(g, cfg.degree, cfg.action, A, secs, cfg.H)


# ---------------------------------------------------------------------------
# energy identity
# ---------------------------------------------------------------------------


@dataclass
class EnergyBreakdown:
    energy: float
    dbar_term: float
    moment_term: float
    topological: float
    topological_exact: float
    hamiltonian_term: float
    rhs: float
    gap: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def energy(cfg: VortexConfig, tau: float) -> float:
    """1/2 int (|d_{A,H} u|^2 + |F_A|^2 + |mu(u) - tau|^2) with links, plaquettes and nodes."""
    g = cfg.grid
    total = 0.0
    H = cfg.H if cfg.H is not None and not cfg.H.is_zero() else None
    if H is not None:
        Xs, Ys = g.mesh(0.5, 0.0)
        Xt, Yt = g.mesh(0.0, 0.5)
        mids = [link_midpoints(cfg, k) for k in range(cfg.action.n)]
        xf_s, _ = H.vector_fields(Xs, Ys, [m[0] for m in mids])
        _, xg_t = H.vector_fields(Xt, Yt, [m[1] for m in mids])
    for k in range(cfg.action.n):
        vs, vt = link_derivatives(cfg, k)
        if H is not None:
            vs, vt = vs + xf_s[k], vt + xg_t[k]
        total += np.sum(np.abs(vs) ** 2) + np.sum(np.abs(vt) ** 2)
    total += np.sum(field_strength(cfg) ** 2)
    total += np.sum((cfg.mu() - tau) ** 2)
    return float(0.5 * total * g.cell_area)


def _extended_rows(cfg: VortexConfig, k: int) -> np.ndarray:
    """Rows j = -1 .. ny + 1 of section k in the trivialization over the base cell."""
    u = cfg.sections[k]
    up = _shift(cfg, k, 0, 1)  # row j holds u(j + 1)
    down = _shift(cfg, k, 0, -1)
    return np.concatenate([down[:, :1], u, up[:, -1:], section_shift(cfg.grid, u, 0, 2, cfg.degree * cfg.action.weights[k])[:, -1:]], axis=1)


def topological_term(cfg: VortexConfig, tau: float) -> float:
    """int u^* omega - (2 pi d / lx) int (mu - tau)(x, 0) dx over the base cell.

    This is int [omega(D_s u, D_t u) + f (mu - tau)] rewritten so that the
    connection drops out; the first integrand is not periodic in y, so it is
    integrated with the trapezoid rule over rows 0..ny.
    """
    g = cfg.grid
    dens = np.zeros((g.nx, g.ny + 1))
    for k in range(cfg.action.n):
        ext = _extended_rows(cfg, k)  # columns j = -1 .. ny + 1
        rows = ext[:, 1:-1]  # j = 0 .. ny
        ds = (np.roll(rows, -1, axis=0) - np.roll(rows, 1, axis=0)) / (2 * g.hx)
        dt = (ext[:, 2:] - ext[:, :-2]) / (2 * g.hy)
        dens += np.imag(np.conj(ds) * dt)
    w = np.full(g.ny + 1, g.hy)
    w[0] = w[-1] = 0.5 * g.hy
    bulk = float(np.sum(dens * w[None, :]) * g.hx)
    boundary = (2 * math.pi * cfg.degree / g.lx) * float(np.sum(cfg.mu()[:, 0] - tau) * g.hx)
    return bulk - boundary


def energy_identity_check(cfg: VortexConfig, tau: float) -> EnergyBreakdown:
    """E against 1/2|d-bar|^2 + 1/2|-f + mu - tau|^2 + topological + int Omega_H(u)."""
    g = cfg.grid
    X, Y = g.mesh()
    H = cfg.H if cfg.H is not None and not cfg.H.is_zero() else None
    dbar_sq = 0.0
    xf = xg = None
    if H is not None:
        xf, xg = H.vector_fields(X, Y, cfg.sections)
    for k in range(cfg.action.n):
        ds, dt = node_derivatives(cfg, k)
        if H is not None:
            ds, dt = ds + xf[k], dt + xg[k]
        dbar_sq += np.sum(np.abs(ds + 1j * dt) ** 2)
    dbar_term = 0.5 * float(dbar_sq) * g.cell_area
    f_nodes = plaquette_to_nodes(field_strength(cfg))
    moment_term = 0.5 * float(np.sum((-f_nodes + cfg.mu() - tau) ** 2)) * g.cell_area
    top = topological_term(cfg, tau)
    ham = 0.0
    if H is not None:
        r = [np.abs(u) ** 2 for u in cfg.sections]
        ham = float(g.integrate(H.curvature(X, Y, r)))
    E = energy(cfg, tau)
    rhs = dbar_term + moment_term + top + ham
    return EnergyBreakdown(E, dbar_term, moment_term, top, 2 * math.pi * cfg.degree * tau, ham, rhs, E - rhs)


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------


@dataclass
class VortexReport:
    kw_residual: float
    kw_iters: int
    dbar_sup: float
    moment_sup: float
    integrated_identity_gap: float
    zeros_ok: bool
    history: List[float] = field(default_factory=list)

    def summary(self) -> dict:
        return dict(self.__dict__)


def bradlow_threshold(grid: TorusGrid, degree: int) -> float:
    return 2 * math.pi * degree / grid.volume


def integrated_identity_gap(cfg: VortexConfig, tau: float) -> float:
    g = cfg.grid
    lhs = float(g.integrate(cfg.mu()))
    return lhs - (tau * g.volume - 2 * math.pi * cfg.degree)


def plaquette_winding(cfg: VortexConfig, k: int, return_defect: bool = False):
    """Gauge-invariant winding number of section k around every plaquette.

    Sums the wrapped phases of u_a^* U u_b along the four edges and removes
    the enclosed flux; the result is an integer field whose total is the
    section degree.  Plaquettes touching an exact zero give 0.
    """
    g = cfg.grid
    l = cfg.action.weights[k]
    Us, Ut = link_transports(cfg, k)
    u = cfg.sections[k]
    up_s = _shift(cfg, k, 1, 0)
    up_t = _shift(cfg, k, 0, 1)
    th_s = np.angle(np.conj(u) * Us * up_s)  # edge (i,j) -> (i+1,j)
    th_t = np.angle(np.conj(u) * Ut * up_t)  # edge (i,j) -> (i,j+1)
    # bottom + right - top - left, with the top edge carrying the t-twist
    Us_up = np.exp(1j * l * g.hx * cfg.A.As_up().imag)
    top = np.angle(np.conj(up_t) * Us_up * _shift(cfg, k, 1, 1))
    loop = th_s + np.roll(th_t, -1, axis=0) - top - th_t
    flux = l * field_strength(cfg) * g.cell_area
    w = (loop - flux) / (2 * math.pi)
    if return_defect:
        return np.rint(w).astype(int), float(np.max(np.abs(w - np.rint(w))))
    return np.rint(w).astype(int)


def check_zeros(cfg: VortexConfig, divisors, radius_cells: float = 1.5, exact_zero: float = 1e-12) -> bool:
    """Zeros of each section sit at the prescribed points with multiplicity.

    Windings are counted on plaquettes within ``radius_cells`` of each point;
    a node where |u| vanishes to rounding counts as a zero at that node.
    No winding or exact zero may appear away from the prescribed points.
    """
    g = cfg.grid
    h = max(g.hx, g.hy)
    Xn, Yn = g.mesh()
    Xp, Yp = g.mesh(0.5, 0.5)

    def dist(X, Y, p):
        dx = (X - p[0] + g.lx / 2) % g.lx - g.lx / 2
        dy = (Y - p[1] + g.ly / 2) % g.ly - g.ly / 2
        return np.hypot(dx, dy)

    for k, D in enumerate(divisors):
        u = np.abs(cfg.sections[k])
        dead = u <= exact_zero * u.max()
        wind = plaquette_winding(cfg, k)
        touched = dead | np.roll(dead, -1, 0) | np.roll(dead, -1, 1) | np.roll(dead, (-1, -1), (0, 1))
        wind = np.where(touched, 0, wind)
        seen_nodes = np.zeros(g.shape, bool)
        seen_plaq = np.zeros(g.shape, bool)
        points = {}
        for p in D:
            key = (round(p[0] % g.lx, 12), round(p[1] % g.ly, 12))
            points[key] = points.get(key, 0) + 1
        for p, mult in points.items():
            near_n = dist(Xn, Yn, p) <= radius_cells * h
            near_p = dist(Xp, Yp, p) <= radius_cells * h
            seen_nodes |= near_n
            seen_plaq |= near_p
            if not (np.any(dead & near_n) or int(np.sum(wind[near_p])) == mult):
                return False
        if np.any(dead & ~seen_nodes) or np.any((wind != 0) & ~seen_plaq):
            return False
    return True


def solve_vortex(
    grid: TorusGrid,
    degree: int,
    weights: Sequence[int],
    divisors: Sequence[Sequence[Tuple[float, float]]],
    tau: float,
    tol: float = 1e-10,
) -> Tuple[VortexConfig, VortexReport]:
    """Solve the vortex equations by complex gauge reduction to Kazdan-Warner.

    Writing u_l = e^{l w/2} Theta_l and a = a_b + (-d_t psi, d_s psi) with
    psi ~ w/2 turns the moment equation into

        L w + sum_l l e^{l w} |Theta_l|^2 = 2 (tau - 2 pi d / Vol).

    After the scalar solve, a is rebuilt so that the plaquette moment
    residual vanishes: its co-exact part comes from a Poisson solve on the
    dual lattice.
    """
    action = LinearAction(tuple(weights))
    if degree < 0:
        raise ProblemError("degree must be nonnegative (negative bundles have no holomorphic sections)")
    thr = bradlow_threshold(grid, degree)
    if not tau > thr:
        raise ProblemError(f"infeasible: tau = {tau} must exceed 2 pi d / Vol = {thr:.12g}")
    bg = background(grid, degree, action.weights, divisors)
    hs = [np.abs(s) ** 2 for s in bg.sections]
    rhs = 2 * (tau - thr)
    rep = solve_kw_multiweight(grid, hs, action.weights, rhs, tol)
    w = rep.u
    sections = [np.exp(l * w / 2) * s for l, s in zip(action.weights, bg.sections)]

    A0 = reference_connection(grid, degree)
    a_s = A0.As.imag + bg.a_s_harmonic
    a_t = np.full(grid.shape, bg.a_t_harmonic)
    mu = moment_map(action, sections)
    target = nodes_to_plaquettes(mu) - tau  # desired f on plaquettes
    f_b = -thr
    src = target - f_b
    src = src - np.mean(src)
    chi = poisson_solve(grid, -src)  # L chi = -(f - f_b) on the dual lattice
    # chi sits on plaquette centres: b_t(i, j+1/2) = D_s chi, b_s(i+1/2, j) = -D_t chi
    b_t = (chi - np.roll(chi, 1, axis=0)) / grid.hx
    b_s = -(chi - np.roll(chi, 1, axis=1)) / grid.hy
    A = LatticeConnection(grid, "u1", 1j * (a_s + b_s), 1j * (a_t + b_t), degree)
    cfg = VortexConfig(grid, degree, action, A, sections)
    res = vortex_residual(cfg, tau)
    report = VortexReport(
        kw_residual=rep.residual_sup,
        kw_iters=rep.newton_iters,
        dbar_sup=res.dbar_sup,
        moment_sup=res.moment_sup,
        integrated_identity_gap=integrated_identity_gap(cfg, tau),
        zeros_ok=check_zeros(cfg, divisors) if degree > 0 else True,
        history=rep.history,
    )
    return cfg, report


# ---------------------------------------------------------------------------
# smooth test configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothConfigSpec:
    """Continuum data for a random smooth configuration, resampled on any grid."""

    degree: int
    weights: Tuple[int, ...]
    zeros: Tuple[Tuple[Tuple[float, float], ...], ...]
    section_modes: Tuple[object, ...]
    connection_modes: Tuple[object, object]
    lx: float = 1.0
    ly: float = 1.0
    section_scale: float = 1.0

    def sample(self, nx: int, ny: int, H: Optional[HamiltonianPerturbation] = None) -> VortexConfig:
        grid = TorusGrid(nx, ny, self.lx, self.ly)
        bg = background(grid, self.degree, self.weights, [list(z) for z in self.zeros])
        X, Y = grid.mesh()
        secs = []
        for s, (re, im) in zip(bg.sections, self.section_modes):
            secs.append(self.section_scale * s * (1.0 + re(X, Y) + 1j * im(X, Y)))
        ms, mt = self.connection_modes
        Xs, Ys = grid.mesh(0.5, 0.0)
        Xt, Yt = grid.mesh(0.0, 0.5)
        A0 = reference_connection(grid, self.degree)
        a_s = A0.As.imag + bg.a_s_harmonic + ms(Xs, Ys)
        a_t = bg.a_t_harmonic + mt(Xt, Yt)
        A = LatticeConnection(grid, "u1", 1j * a_s, 1j * a_t, self.degree)
        return VortexConfig(grid, self.degree, LinearAction(self.weights), A, secs, H)


def random_smooth_spec(rng: np.random.Generator, degree: int = 1, weights: Sequence[int] = (1,),
                       amplitude: float = 0.3, modes: int = 1, lx: float = 1.0, ly: float = 1.0,
                       section_scale: float = 1.0) -> SmoothConfigSpec:
    from .surface import smooth_periodic

    grid = TorusGrid(4, 4, lx, ly)
    # zeros symmetric about one base point: every section has centre of mass
    # equal to its degree times the base point, so the sections are compatible
    base = (float(rng.uniform(0, lx)), float(rng.uniform(0, ly)))
    zeros = []
    for l in weights:
        n = degree * l
        pts = [((base[0] + 0.8 * lx * (k - (n - 1) / 2) / max(n, 1)) % lx, base[1]) for k in range(n)]
        zeros.append(tuple(pts))
    sec = tuple((smooth_periodic(grid, rng, modes, amplitude), smooth_periodic(grid, rng, modes, amplitude)) for _ in weights)
    con = (smooth_periodic(grid, rng, modes, amplitude), smooth_periodic(grid, rng, modes, amplitude))
    return SmoothConfigSpec(degree, tuple(weights), tuple(zeros), sec, con, lx, ly, section_scale)

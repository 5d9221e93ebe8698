"""Flat 2-tori: grids, discrete calculus, twisted sections and lattice connections.

Layout.  Scalars and sections live on nodes ``(i, j)`` at ``(i*hx, j*hy)``.
One-forms live on links: the s-component at ``(i+1/2, j)``, the
t-component at ``(i, j+1/2)``.  Curvature lives on plaquettes
``(i+1/2, j+1/2)``, stored at index ``(i, j)``.  ``d`` is the forward
difference and ``d_star`` its exact l^2 adjoint, so ``laplacian`` is the
5-point stencil.  Operators act on the last two axes, so leading batch axes
are allowed.

Twist.  A section of the degree-d bundle satisfies
``u(x + lx, y) = u(x, y)`` and ``u(x, y + ly) = exp(-2 pi i d x / lx) u(x, y)``.
Correspondingly a u(1) connection satisfies
``A_s(x, y + ly) = A_s(x, y) + 2 pi i d / lx`` and is periodic otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Tuple

import os

import numpy as np
import scipy.fft as sfft

from . import lie
from .lie import SU2, U1


def fft_workers() -> int:
    """Thread cap for batched FFTs, from VORTEXLAB_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("VORTEXLAB_THREADS", "1")))
    except ValueError:
        return 1


def rfft2(a: np.ndarray) -> np.ndarray:
    return sfft.rfft2(a, axes=(-2, -1), workers=fft_workers())


def irfft2(a: np.ndarray, shape) -> np.ndarray:
    return sfft.irfft2(a, s=shape, axes=(-2, -1), workers=fft_workers())


@dataclass(frozen=True)
class TorusGrid:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 4 or n % 2:
                raise ValueError(f"grid sizes must be even and >= 4, got {self.nx}x{self.ny}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("periods must be positive")

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def volume(self) -> float:
        return self.lx * self.ly

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.hx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.hy

    def mesh(self, sx: float = 0.0, sy: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        """Node coordinates, optionally shifted by fractions of a cell."""
        return np.meshgrid((np.arange(self.nx) + sx) * self.hx, (np.arange(self.ny) + sy) * self.hy, indexing="ij")

    def integrate(self, f: np.ndarray) -> np.ndarray:
        return np.sum(f, axis=(-2, -1)) * self.cell_area

    def mean(self, f: np.ndarray) -> np.ndarray:
        return np.mean(f, axis=(-2, -1))

    def scaled(self, factor: float) -> "TorusGrid":
        return replace(self, lx=self.lx * factor, ly=self.ly * factor)


# ---------------------------------------------------------------------------
# scalar calculus
# ---------------------------------------------------------------------------


def d(grid: TorusGrid, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return (
        (np.roll(u, -1, axis=-2) - u) / grid.hx,
        (np.roll(u, -1, axis=-1) - u) / grid.hy,
    )


def d_star(grid: TorusGrid, w: Tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    ws, wt = w
    return (np.roll(ws, 1, axis=-2) - ws) / grid.hx + (np.roll(wt, 1, axis=-1) - wt) / grid.hy


def laplacian(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    """Positive discrete d^*d (5-point stencil)."""
    return (
        (2 * u - np.roll(u, 1, axis=-2) - np.roll(u, -1, axis=-2)) / grid.hx**2
        + (2 * u - np.roll(u, 1, axis=-1) - np.roll(u, -1, axis=-1)) / grid.hy**2
    )


def laplacian_symbol(grid: TorusGrid) -> np.ndarray:
    """Eigenvalues of :func:`laplacian` on the rfft2 frequency layout."""
    kx = 2 * np.pi * np.fft.fftfreq(grid.nx)
    ky = 2 * np.pi * np.fft.rfftfreq(grid.ny)
    return (2 / grid.hx**2) * (1 - np.cos(kx))[:, None] + (2 / grid.hy**2) * (1 - np.cos(ky))[None, :]


def poisson_solve(grid: TorusGrid, rhs: np.ndarray, shift: float = 0.0, check_mean: bool = True) -> np.ndarray:
    """Solve (laplacian + shift) u = rhs spectrally.

    With ``shift == 0`` the right-hand side must have zero mean and the
    mean-zero solution is returned.
    """
    rhs = np.asarray(rhs, dtype=float)
    if shift == 0.0 and check_mean:
        scale = max(float(np.max(np.abs(rhs))), 1e-300)
        m = np.max(np.abs(grid.mean(rhs)))
        if m > 1e-12 * scale and m > 1e-300:
            raise ValueError(f"poisson_solve: right-hand side has nonzero mean {m:.3e}")
    sym = laplacian_symbol(grid) + shift
    r = rfft2(rhs)
    if shift == 0.0:
        sym = sym.copy()
        sym[0, 0] = 1.0
        r[..., 0, 0] = 0.0
    return irfft2(r / sym, grid.shape)


def inner_0(grid: TorusGrid, u: np.ndarray, v: np.ndarray) -> float:
    return float(np.sum(u * v) * grid.cell_area)


def inner_1(grid: TorusGrid, a, b) -> float:
    return float((np.sum(a[0] * b[0]) + np.sum(a[1] * b[1])) * grid.cell_area)


# ---------------------------------------------------------------------------
# twisted sections
# ---------------------------------------------------------------------------


def twist_phase(grid: TorusGrid, degree: int) -> np.ndarray:
    """Transition factor exp(-2 pi i d x / lx) applied on the y-wrap, per column i."""
    return np.exp(-2j * np.pi * degree * grid.x / grid.lx)


@dataclass
class TwistedSection:
    grid: TorusGrid
    values: np.ndarray
    degree: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError("section shape does not match grid")

    def shifted(self, di: int, dj: int) -> np.ndarray:
        """Values at (i + di, j + dj) in the trivialization over the base cell."""
        return section_shift(self.grid, self.values, di, dj, self.degree)


def section_shift(grid: TorusGrid, values: np.ndarray, di: int, dj: int, degree: int) -> np.ndarray:
    out = np.roll(values, -di, axis=0)
    if dj == 0:
        return out
    if abs(dj) != 1:
        return section_shift(grid, section_shift(grid, values, di, int(np.sign(dj)), degree), 0, dj - int(np.sign(dj)), degree)
    phase = twist_phase(grid, degree)
    if di:
        phase = np.roll(phase, -di)
    out = np.roll(out, -dj, axis=1)
    if dj == 1:
        out[:, -1] = out[:, -1] * phase
    else:
        out[:, 0] = out[:, 0] / phase
    return out


def cocycle_defect(grid: TorusGrid, degree: int) -> float:
    """Mismatch between the two ways of wrapping a corner.

    u(x + lx, y + ly) is phi(x) u(x, y) going through the x-wrap first and
    phi(x + lx) u(x, y) going through the y-wrap first.
    """
    x = grid.x
    phi = np.exp(-2j * np.pi * degree * x / grid.lx)
    phi_wrapped = np.exp(-2j * np.pi * degree * (x + grid.lx) / grid.lx)
    return float(np.max(np.abs(phi - phi_wrapped)))


# ---------------------------------------------------------------------------
# lattice connections
# ---------------------------------------------------------------------------


@dataclass
class LatticeConnection:
    """Lie-algebra valued connection on links; ``degree`` only for u1."""

    grid: TorusGrid
    group: str
    As: np.ndarray
    At: np.ndarray
    degree: int = 0

    def __post_init__(self):
        shape = self.grid.shape + lie.lie_shape(self.group)
        self.As = np.asarray(self.As, dtype=complex)
        self.At = np.asarray(self.At, dtype=complex)
        if self.As.shape != shape or self.At.shape != shape:
            raise ValueError(f"connection components must have shape {shape}")
        if self.group == SU2 and self.degree:
            raise ValueError("su2 connections live on the trivial bundle")

    @classmethod
    def zero(cls, grid: TorusGrid, group: str = U1) -> "LatticeConnection":
        shape = grid.shape + lie.lie_shape(group)
        return cls(grid, group, np.zeros(shape, complex), np.zeros(shape, complex))

    def copy(self) -> "LatticeConnection":
        return LatticeConnection(self.grid, self.group, self.As.copy(), self.At.copy(), self.degree)

    def __add__(self, other) -> "LatticeConnection":
        """Connection plus a 1-form (pair of arrays or another connection's difference)."""
        ws, wt = other
        return LatticeConnection(self.grid, self.group, self.As + ws, self.At + wt, self.degree)

    def __sub__(self, other: "LatticeConnection") -> Tuple[np.ndarray, np.ndarray]:
        check_same(self, other)
        if self.degree != other.degree:
            raise ValueError("connections on different bundles")
        return (self.As - other.As, self.At - other.At)

    def __iter__(self):
        return iter((self.As, self.At))

    def links(self) -> Tuple[np.ndarray, np.ndarray]:
        """Parallel transports exp(h A) on s- and t-links."""
        return lie.exp(self.group, self.grid.hx * self.As), lie.exp(self.group, self.grid.hy * self.At)

    def As_up(self) -> np.ndarray:
        """A_s at (i+1/2, j+1), including the transition on the y-wrap."""
        out = np.roll(self.As, -1, axis=1)
        if self.group == U1 and self.degree:
            out[:, -1] += 2j * np.pi * self.degree / self.grid.lx
        return out


def check_same(A: LatticeConnection, B: LatticeConnection) -> None:
    if A.group != B.group:
        raise ValueError(f"group mismatch: {A.group} vs {B.group}")
    if A.grid != B.grid:
        raise ValueError("grid mismatch")


def reference_connection(grid: TorusGrid, degree: int) -> LatticeConnection:
    """Constant-curvature u1 connection A0 = (2 pi i d y / (lx ly)) ds."""
    _, Y = grid.mesh()
    As = 2j * np.pi * degree * Y / grid.volume
    return LatticeConnection(grid, U1, As, np.zeros(grid.shape, complex), degree)


def _check_field(A: LatticeConnection, xi: np.ndarray) -> None:
    expected = A.grid.shape + lie.lie_shape(A.group)
    if xi.shape[-len(expected):] != expected:
        raise ValueError(f"{A.group} field expected with shape {expected}, got {xi.shape}")


def covariant_d(A: LatticeConnection, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(U_e(x) xi(x+e) U_e(x)^{-1} - xi(x)) / h_e for the adjoint bundle."""
    _check_field(A, xi)
    grid = A.grid
    if A.group == U1:
        return d(grid, xi)
    Us, Ut = A.links()
    xs = lie.conjugate(SU2, Us, np.roll(xi, -1, axis=0))
    xt = lie.conjugate(SU2, Ut, np.roll(xi, -1, axis=1))
    return (xs - xi) / grid.hx, (xt - xi) / grid.hy


def covariant_d_star(A: LatticeConnection, alpha) -> np.ndarray:
    """Exact adjoint of :func:`covariant_d` for Re tr(X^* Y) and cell-area weights."""
    grid = A.grid
    a_s, a_t = alpha
    if A.group == U1:
        return d_star(grid, (a_s, a_t))
    Us, Ut = A.links()
    bs = np.roll(lie.conjugate(SU2, lie.dagger(Us), a_s), 1, axis=0)
    bt = np.roll(lie.conjugate(SU2, lie.dagger(Ut), a_t), 1, axis=1)
    return (bs - a_s) / grid.hx + (bt - a_t) / grid.hy


def lie_inner_1(grid: TorusGrid, group: str, a, b) -> float:
    return float((np.sum(lie.inner(group, a[0], b[0])) + np.sum(lie.inner(group, a[1], b[1]))) * grid.cell_area)


def lie_inner_0(grid: TorusGrid, group: str, x, y) -> float:
    return float(np.sum(lie.inner(group, x, y)) * grid.cell_area)


def curvature(A: LatticeConnection) -> np.ndarray:
    """Plaquette curvature d_s A_t - d_t A_s + [A_s, A_t] (central differences)."""
    grid = A.grid
    At_right = np.roll(A.At, -1, axis=0)
    As_up = A.As_up()
    F = (At_right - A.At) / grid.hx - (As_up - A.As) / grid.hy
    if A.group == SU2:
        F = F + lie.bracket(SU2, 0.5 * (A.As + As_up), 0.5 * (A.At + At_right))
    return F


def plaquette_to_nodes(f: np.ndarray) -> np.ndarray:
    """Average the four plaquettes around each node (plaquette (i,j) has corners (i..i+1, j..j+1))."""
    return 0.25 * (f + np.roll(f, 1, axis=0) + np.roll(f, 1, axis=1) + np.roll(np.roll(f, 1, axis=0), 1, axis=1))


def nodes_to_plaquettes(u: np.ndarray) -> np.ndarray:
    return 0.25 * (u + np.roll(u, -1, axis=0) + np.roll(u, -1, axis=1) + np.roll(np.roll(u, -1, axis=0), -1, axis=1))


def smooth_periodic(grid: TorusGrid, rng: np.random.Generator, modes: int = 2, amplitude: float = 1.0,
                    sx: float = 0.0, sy: float = 0.0) -> "SmoothField":
    """Random trigonometric polynomial, returned as a callable of (x, y)."""
    coeffs = rng.standard_normal((2 * modes + 1, 2 * modes + 1, 2)) * amplitude
    coeffs /= (1 + np.add.outer(np.arange(-modes, modes + 1) ** 2, np.arange(-modes, modes + 1) ** 2))[..., None]
    return SmoothField(grid.lx, grid.ly, modes, coeffs)


@dataclass
class SmoothField:
    """Real trigonometric polynomial on the torus with analytic derivatives."""

    lx: float
    ly: float
    modes: int
    coeffs: np.ndarray = field(repr=False)

    def _terms(self, X, Y):
        ks = np.arange(-self.modes, self.modes + 1)
        for a, kx in enumerate(ks):
            for b, ky in enumerate(ks):
                ph = 2 * np.pi * (kx * X / self.lx + ky * Y / self.ly)
                yield kx, ky, self.coeffs[a, b, 0], self.coeffs[a, b, 1], ph

    def __call__(self, X, Y):
        out = np.zeros(np.broadcast(X, Y).shape)
        for _, _, c, s, ph in self._terms(X, Y):
            out += c * np.cos(ph) + s * np.sin(ph)
        return out

    def dx(self, X, Y):
        out = np.zeros(np.broadcast(X, Y).shape)
        for kx, _, c, s, ph in self._terms(X, Y):
            w = 2 * np.pi * kx / self.lx
            out += w * (-c * np.sin(ph) + s * np.cos(ph))
        return out

    def dy(self, X, Y):
        out = np.zeros(np.broadcast(X, Y).shape)
        for _, ky, c, s, ph in self._terms(X, Y):
            w = 2 * np.pi * ky / self.ly
            out += w * (-c * np.sin(ph) + s * np.cos(ph))
        return out

    def laplacian(self, X, Y):
        """Continuum -(d_xx + d_yy)."""
        out = np.zeros(np.broadcast(X, Y).shape)
        for kx, ky, c, s, ph in self._terms(X, Y):
            w2 = (2 * np.pi * kx / self.lx) ** 2 + (2 * np.pi * ky / self.ly) ** 2
            out += w2 * (c * np.cos(ph) + s * np.sin(ph))
        return out

"""Pointwise helpers for u(1) and su(2) valued grid fields.

u(1) fields are complex arrays holding purely imaginary values; su(2) fields
are complex arrays whose last two axes are traceless anti-Hermitian 2x2
matrices.  The inner product is Re trace(X^* Y).
"""

from __future__ import annotations

import numpy as np

U1 = "u1"
SU2 = "su2"

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)
# orthonormal basis of su(2) for Re tr(X^* Y)
SU2_BASIS = 1j * PAULI / np.sqrt(2.0)


def lie_shape(group: str) -> tuple:
    if group == U1:
        return ()
    if group == SU2:
        return (2, 2)
    raise ValueError(f"unknown group {group!r}")


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def inner(group: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pointwise Re tr(x^* y)."""
    if group == U1:
        return np.real(np.conj(x) * y)
    return np.real(np.einsum("...ij,...ij->...", np.conj(x), y))


def norm2(group: str, x: np.ndarray) -> np.ndarray:
    return inner(group, x, x)


def bracket(group: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if group == U1:
        return np.zeros(np.broadcast(x, y).shape, dtype=complex)
    return x @ y - y @ x


def conjugate(group: str, g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """g x g^{-1} for unitary g."""
    if group == U1:
        return x
    return g @ x @ dagger(g)


def to_coords(x: np.ndarray) -> np.ndarray:
    """su(2) matrices -> real coordinates in SU2_BASIS (last axis of size 3)."""
    return np.real(np.einsum("aij,...ij->...a", np.conj(SU2_BASIS), x))


def from_coords(c: np.ndarray) -> np.ndarray:
    return np.einsum("...a,aij->...ij", c, SU2_BASIS)


def _theta(x: np.ndarray) -> np.ndarray:
    # X^2 = -theta^2 I and |X|^2 = 2 theta^2
    return np.sqrt(np.maximum(norm2(SU2, x), 0.0) / 2.0)


def _sinc(t: np.ndarray) -> np.ndarray:
    return np.sinc(t / np.pi)


def exp(group: str, x: np.ndarray) -> np.ndarray:
    if group == U1:
        return np.exp(x)
    th = _theta(x)[..., None, None]
    eye = np.eye(2, dtype=complex)
    return np.cos(th) * eye + _sinc(th) * x


def log(group: str, u: np.ndarray) -> np.ndarray:
    """Principal logarithm (angle in (-pi, pi] for u1, theta in [0, pi) for su2)."""
    if group == U1:
        return 1j * np.angle(u)
    c = np.clip(np.real(np.trace(u, axis1=-2, axis2=-1)) / 2.0, -1.0, 1.0)
    th = np.arccos(c)[..., None, None]
    skew = (u - dagger(u)) / 2.0
    return skew / _sinc(th)


def dexp_inv_right(group: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """psi(ad_x) y with psi(z) = z / (e^z - 1).

    This is d/de log(exp(e y) exp(x)) at e = 0.
    """
    if group == U1:
        return y
    th = _theta(x)
    nx2 = norm2(SU2, x)
    safe = np.where(nx2 > 0, nx2, 1.0)
    par = (inner(SU2, x, y) / safe)[..., None, None] * x
    par = np.where((nx2 > 0)[..., None, None], par, 0.0)
    perp = y - par
    small = th < 1e-4
    tcot = np.where(small, 1.0 - th**2 / 3.0, th / np.tan(np.where(small, 1.0, th)))
    return par + tcot[..., None, None] * perp - 0.5 * bracket(SU2, x, y)


def random_algebra(group: str, shape: tuple, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    if group == U1:
        return 1j * scale * rng.standard_normal(shape)
    return from_coords(scale * rng.standard_normal(shape + (3,)))


def identity(group: str, shape: tuple) -> np.ndarray:
    if group == U1:
        return np.ones(shape, dtype=complex)
    return np.broadcast_to(np.eye(2, dtype=complex), shape + (2, 2)).copy()

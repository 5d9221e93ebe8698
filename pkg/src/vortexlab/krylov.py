"""Conjugate gradient variants used by the Newton solvers.

``pcg`` runs independent CG iterations on a batch of systems stacked along
leading axes; the trailing ``field_ndim`` axes hold one unknown field.  This
lets the coupled solver run all fibre problems at once without a Python loop.
``deflated_pcg`` removes a known kernel so that singular but symmetric
positive semidefinite operators can be inverted on its orthogonal complement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

Operator = Callable[[np.ndarray], np.ndarray]


class SolverError(RuntimeError):
    """A linear or nonlinear iteration failed to converge."""


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: np.ndarray  # final relative residual per batch member


def _dot(a: np.ndarray, b: np.ndarray, field_ndim: int) -> np.ndarray:
    axes = tuple(range(-field_ndim, 0))
    return np.real(np.sum(np.conj(a) * b, axis=axes))


def _bcast(v: np.ndarray, field_ndim: int) -> np.ndarray:
    return v.reshape(v.shape + (1,) * field_ndim)


def pcg(
    apply_a: Operator,
    b: np.ndarray,
    precond: Optional[Operator] = None,
    x0: Optional[np.ndarray] = None,
    tol: float = 1e-12,
    maxiter: int = 500,
    field_ndim: int = 2,
    raise_on_fail: bool = True,
) -> CGResult:
    """Preconditioned CG for SPD ``apply_a``, batched over leading axes.

    Stops when every member reaches ||r|| <= tol ||b||.  Converged members
    are frozen so later iterations cannot perturb them.
    """
    precond = precond or (lambda r: r)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=b.dtype, copy=True)
    r = b - apply_a(x) if x0 is not None else b.copy()
    bnorm = np.sqrt(_dot(b, b, field_ndim))
    bnorm = np.where(bnorm > 0, bnorm, 1.0)
    z = precond(r)
    p = z.copy()
    rz = _dot(r, z, field_ndim)
    rel = np.sqrt(_dot(r, r, field_ndim)) / bnorm
    it = 0
    while np.any(rel > tol) and it < maxiter:
        active = rel > tol
        ap = apply_a(p)
        pap = _dot(p, ap, field_ndim)
        alpha = np.where(active & (pap > 0), rz / np.where(pap > 0, pap, 1.0), 0.0)
        x = x + _bcast(alpha, field_ndim) * p
        r = r - _bcast(alpha, field_ndim) * ap
        z = precond(r)
        rz_new = _dot(r, z, field_ndim)
        beta = np.where(active, rz_new / np.where(rz != 0, rz, 1.0), 0.0)
        p = z + _bcast(beta, field_ndim) * p
        rz = rz_new
        rel = np.where(active, np.sqrt(_dot(r, r, field_ndim)) / bnorm, rel)
        it += 1
    if raise_on_fail and np.any(rel > tol):
        raise SolverError(f"CG did not converge in {maxiter} iterations (residual {np.max(rel):.3e})")
    return CGResult(x, it, rel)


def orthonormalize(basis: Sequence[np.ndarray], field_ndim: int) -> list:
    """Gram-Schmidt on kernel vectors (dropping dependent ones)."""
    out = []
    for v in basis:
        w = np.array(v, dtype=complex if np.iscomplexobj(v) else float)
        for q in out:
            w = w - _bcast(_dot(q, w, field_ndim), field_ndim) * q
        n = np.sqrt(_dot(w, w, field_ndim))
        if np.all(n > 1e-12):
            out.append(w / _bcast(n, field_ndim))
    return out


def project_out(v: np.ndarray, kernel: Sequence[np.ndarray], field_ndim: int) -> np.ndarray:
    for q in kernel:
        v = v - _bcast(_dot(q, v, field_ndim), field_ndim) * q
    return v


def deflated_pcg(
    apply_a: Operator,
    b: np.ndarray,
    kernel: Sequence[np.ndarray],
    precond: Optional[Operator] = None,
    tol: float = 1e-12,
    maxiter: int = 500,
    field_ndim: int = 2,
    check_range: bool = True,
) -> CGResult:
    """Solve A x = b on the orthogonal complement of an orthonormal kernel.

    ``b`` must be orthogonal to the kernel (otherwise the system has no
    solution); the component along the kernel is reported as an error.
    """
    bn = np.sqrt(_dot(b, b, field_ndim))
    pb = project_out(b, kernel, field_ndim)
    if check_range:
        leak = np.sqrt(sum(_dot(q, b, field_ndim) ** 2 for q in kernel)) if kernel else np.zeros_like(bn)
        if np.any(leak > 1e-8 * np.maximum(bn, 1e-300)) and np.any(bn > 0):
            raise SolverError(f"right-hand side not orthogonal to the kernel (leak {np.max(leak):.3e})")
    base_pre = precond or (lambda r: r)

    def pre(r):
        return project_out(base_pre(project_out(r, kernel, field_ndim)), kernel, field_ndim)

    def op(x):
        return project_out(apply_a(x), kernel, field_ndim)

    res = pcg(op, pb, pre, tol=tol, maxiter=maxiter, field_ndim=field_ndim)
    res.x = project_out(res.x, kernel, field_ndim)
    return res

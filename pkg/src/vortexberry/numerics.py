"""Small deterministic numerical kernels shared by the solver modules."""

from __future__ import annotations

import numpy as np

from .errors import SolverError


def cg(apply_op, rhs, precond=None, tol=1e-10, maxiter=None, name="cg"):
    """Preconditioned conjugate gradient with a fixed iteration order.

    ``apply_op`` and ``precond`` act on arrays of the rhs shape.  Stops when
    the residual norm drops below ``tol * |rhs|``; raises SolverError on
    stagnation past ``maxiter``.
    """
    rhs = np.asarray(rhs)
    if maxiter is None:
        maxiter = 20 * rhs.size
    norm_b = np.linalg.norm(rhs.ravel())
    if norm_b == 0.0:
        return np.zeros_like(rhs)
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = np.vdot(r.ravel(), z.ravel()).real
    for _ in range(maxiter):
        ap = apply_op(p)
        denom = np.vdot(p.ravel(), ap.ravel()).real
        if denom <= 0.0:
            raise SolverError(f"{name}: operator not positive definite")
        a = rz / denom
        x = x + a * p
        r = r - a * ap
        if np.linalg.norm(r.ravel()) <= tol * norm_b:
            return x
        z = precond(r) if precond is not None else r
        rz_new = np.vdot(r.ravel(), z.ravel()).real
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"{name}: no convergence in {maxiter} iterations")


def linear_fit(x, y):
    """Least-squares line y ~ a + b*x; returns (a, b, r_squared)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(a), float(b), r2

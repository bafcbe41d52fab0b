"""Localized approximate moduli tangents and their horizontal corrections.

``approximate_tangent`` realizes the cutoff ansatz Y built from the vortex
profile; its pointwise norm satisfies |Y|^2 = h_density * |sigma|^2 exactly
(this identity pins every convention factor).  ``horizontal_tangent``
projects Y to the horizontal subspace and measures how far the correction
reaches, which should decay like exp(-sqrt(tau) * dist / c).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .lattice import (Divisor, TangentVector, TorusGrid, dist_to_divisor,
                      l2_inner, torus_dist)
from .linops import apply_L, solve_horizontal_correction
from .vortex import VortexField, fit_vortex_tail

__all__ = [
    "TangentSeed", "FrameReport", "rho_min", "bump_section",
    "approximate_tangent", "density_h", "horizontal_tangent", "tangent_frame",
]


@dataclass
class TangentSeed:
    """One (0,1)-covector per divisor point, in the unitary coordinate."""

    divisor: Divisor
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=complex).ravel()
        if self.theta.shape[0] != self.divisor.d:
            raise ConfigurationError("need one theta per divisor point")


@dataclass
class FrameReport:
    gram: np.ndarray
    y_norms: np.ndarray
    sup_xy_diff: np.ndarray
    decay: list


def rho_min(divisor: Divisor, grid: TorusGrid) -> float:
    """Min of pairwise divisor distances and the torus injectivity radius."""
    if divisor.d < 1:
        raise ConfigurationError("rho_min needs at least one divisor point")
    rho = grid.side_length / 2.0
    for a in range(divisor.d):
        for b in range(a + 1, divisor.d):
            rho = min(rho, torus_dist(divisor.points[a], divisor.points[b], grid))
    return rho


def _chi(s: np.ndarray) -> np.ndarray:
    """C^2 cutoff: 1 on [0,1], 0 on [2,inf), quintic smoothstep between."""
    u = np.clip(s - 1.0, 0.0, 1.0)
    fall = 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u ** 2)
    return np.where(s <= 1.0, 1.0, np.where(s >= 2.0, 0.0, fall))


def bump_section(divisor: Divisor, seed: TangentSeed, grid: TorusGrid) -> np.ndarray:
    """Cutoff section sigma with sigma(p) = theta_p, support in dist <= rho."""
    rho = rho_min(divisor, grid)
    if rho <= 4.0 * grid.spacing:
        raise ConfigurationError("cutoff radius below grid resolution")
    x, y = grid.site_coords()
    L = grid.side_length
    sigma = np.zeros((grid.n, grid.n), dtype=complex)
    for p, th in zip(divisor.points, seed.theta):
        dxw = np.abs(x - p[0] % L) % L
        dxw = np.minimum(dxw, L - dxw)
        dyw = np.abs(y - p[1] % L) % L
        dyw = np.minimum(dyw, L - dyw)
        dist = np.hypot(dxw, dyw)
        sigma += _chi(2.0 * dist / rho) * th
    return sigma


def approximate_tangent(field: VortexField, seed: TangentSeed) -> TangentVector:
    """Localized ansatz Y; pointwise |Y|^2 = density_h * |sigma|^2 exactly.

    The relative sign of the two slots is not visible in the norm identity;
    it is pinned by requiring Y to be asymptotically horizontal (the
    opposite sign leaves an O(1) gauge-orbit component).
    """
    tau = field.tau
    sigma = bump_section(field.divisor, seed, field.grid)
    scale = 1.0 / np.sqrt(2.0 * np.pi * tau)
    alpha = scale * np.sqrt(2.0) * field.w * sigma
    psi = scale * np.sqrt(2.0) * sigma * field.dz_phi()
    return TangentVector(alpha, psi)


def density_h(field: VortexField) -> np.ndarray:
    """Moduli density (|d_nabla phi|^2 + 2 w^2) / (2 pi tau); mass -> d."""
    dz = field.dz_phi()
    return (2.0 * np.abs(dz) ** 2 + 2.0 * field.w ** 2) / (2.0 * np.pi * field.tau)


def horizontal_tangent(field: VortexField, seed: TangentSeed,
                       tol: float = 1e-10):
    """Project Y to the horizontal subspace; report the correction decay.

    Returns (x, rows) where rows holds the norms, sup |X - Y| and its
    exponential decay fit against the divisor distance.
    """
    grid = field.grid
    y = approximate_tangent(field, seed)
    z, x = solve_horizontal_correction(field, y, tol=tol)
    diff = x - y
    mag = np.sqrt(np.abs(diff.alpha) ** 2 + np.abs(diff.psi) ** 2)
    dists = dist_to_divisor(field.divisor, grid)
    try:
        fit = fit_vortex_tail(field, mag)
    except Exception:
        fit = None
    far = dists >= 3.0 / np.sqrt(field.tau)
    rows = {
        "y_norm_sq": l2_inner(y, y, grid),
        "x_norm_sq": l2_inner(x, x, grid),
        "sup_xy_diff": float(np.max(mag)),
        "sup_xy_diff_far": float(np.max(mag[far])) if np.any(far) else float("nan"),
        "diff_l2": float(np.sqrt(max(l2_inner(diff, diff, grid), 0.0))),
        "l_residual_rel": apply_L(field, x).norm(grid)
                          / max(np.sqrt(l2_inner(y, y, grid)), 1e-300),
        "decay": fit,
    }
    return x, rows


def canonical_seeds(field: VortexField):
    """Frame seeds theta_{p,q} = delta_{p,q} (unit covector along +xbar)."""
    d = field.divisor.d
    seeds = []
    for p in range(d):
        theta = np.zeros(d, dtype=complex)
        theta[p] = 1.0
        seeds.append(TangentSeed(field.divisor, theta))
    return seeds


def tangent_frame(field: VortexField, tol: float = 1e-10) -> FrameReport:
    """Build {X_p, i X_p} for the canonical seeds and their Gram matrix.

    i X_p is re-projected: the discrete gauge-orbit complement is a real
    subspace (only the continuum kernel is complex-invariant), so the
    rotated vector carries a small vertical component of its own.
    """
    from .linops import project_vertical_complement
    grid = field.grid
    d = field.divisor.d
    vectors = []
    y_norms = []
    sup_diff = []
    decays = []
    for seed in canonical_seeds(field):
        x, rows = horizontal_tangent(field, seed, tol=tol)
        ix, _ = project_vertical_complement(field, 1j * x, tol=tol)
        vectors.append(x)
        vectors.append(ix)
        y_norms.append(rows["y_norm_sq"])
        sup_diff.append(rows["sup_xy_diff"])
        decays.append(rows["decay"])
    gram = np.empty((2 * d, 2 * d))
    for a in range(2 * d):
        for b in range(2 * d):
            gram[a, b] = l2_inner(vectors[a], vectors[b], grid)
    return FrameReport(gram, np.asarray(y_norms), np.asarray(sup_diff), decays), vectors

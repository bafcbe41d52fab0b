"""Vortex solver: Taubes scalar reduction on the flat torus.

The divisor's singular structure is carried by a closed-form product of
Jacobi theta functions (the flat-torus Green's function in disguise), with a
Landau-gauge background completing it to a periodic density.  The smooth
remainder ``v`` of ``h = log|phi|^2`` solves a Liouville-type equation by
damped Newton iteration with spectral Laplacian solves.  Links are exact
line integrals of the smooth gauge potential, so the plaquette fluxes equal
cell integrals of the interpolated ``w`` to solver precision and the total
flux is exactly ``2*pi*d``.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DiagnosticError, SolverError
from .lattice import (Divisor, TorusGrid, chern_degree, dist_to_divisor,
                      plaquette_args)
from .numerics import cg, linear_fit

__all__ = [
    "VortexField", "TaubesSolveReport", "DecayFit",
    "bradlow_limit", "theta1", "solve_vortex", "gl_energy",
    "vortex_residual", "taubes_bounds_check",
]

NEWTON_TOL = 1e-10          # scalar-equation sup-residual, relative to tau
NEWTON_MAXITER = 50
DEFAULT_FIELD_TOL = 2e-2    # discrete (vo1)/(vo2) residual contract; covers
                            # the coarsest grid the core-resolution rule allows
CORE_RESOLUTION = 0.2       # require spacing <= CORE_RESOLUTION / sqrt(tau)


def bradlow_limit(d: int, area: float) -> float:
    """Existence threshold 4*pi*d/area; vortices exist only above it."""
    if d <= 0:
        raise ConfigurationError("bradlow_limit requires d > 0")
    if area <= 0:
        raise ConfigurationError("bradlow_limit requires positive area")
    return 4.0 * np.pi * d / area


def theta1(u, nterms: int = 14):
    """Jacobi theta_1(u | tau=i), nome q = exp(-pi), for complex u.

    The series 2*sum (-1)^k q^{(k+1/2)^2} sin((2k+1)u) converges with a few
    terms for |Im u| <= 2*pi, which covers divisor points up to one period
    outside the fundamental domain (needed by loop transport).
    """
    u = np.asarray(u, dtype=complex)
    q = np.exp(-np.pi)
    out = np.zeros_like(u)
    for k in range(nterms):
        out += 2.0 * (-1) ** k * q ** ((k + 0.5) ** 2) * np.sin((2 * k + 1) * u)
    return out


@dataclass
class TaubesSolveReport:
    newton_iterations: int
    final_residual: float
    h_field: np.ndarray
    wall_time: float


@dataclass
class DecayFit:
    c_fit: float
    exponent_fit: float
    r_squared: float
    samples: list


@dataclass
class VortexField:
    """Solved vortex: scalar field, links and cached derived data."""

    grid: TorusGrid
    tau: float
    divisor: Divisor
    phi: np.ndarray
    links: np.ndarray
    w: np.ndarray
    residual_sup: float
    # construction internals (kept for warm starts and loop transport)
    v: np.ndarray | None = None
    kappa: float = 0.0
    points_raw: np.ndarray | None = None

    def _replace_fields(self, **kw):
        new = dataclasses.replace(self, **kw)
        new.w = 0.5 * (new.tau - np.abs(new.phi) ** 2)
        return new

    @property
    def d(self) -> int:
        return self.divisor.d

    def covariant_diff(self, psi: np.ndarray, axis: int, mode: str = "forward"):
        """Covariant difference of a section along +x (axis=0) or +y (axis=1)."""
        h = self.grid.spacing
        u = self.links[axis]
        if mode == "forward":
            return (np.conj(u) * np.roll(psi, -1, axis=axis) - psi) / h
        if mode == "backward":
            ub = np.roll(u, 1, axis=axis)
            return (psi - ub * np.roll(psi, 1, axis=axis)) / h
        if mode == "centered":
            ub = np.roll(u, 1, axis=axis)
            fwd = np.conj(u) * np.roll(psi, -1, axis=axis)
            bwd = ub * np.roll(psi, 1, axis=axis)
            return (fwd - bwd) / (2.0 * h)
        raise ValueError(f"unknown mode {mode!r}")

    def dz_phi(self) -> np.ndarray:
        """(1,0) covariant derivative component D_z phi (centered stencils)."""
        dx = self.covariant_diff(self.phi, 0, "centered")
        dy = self.covariant_diff(self.phi, 1, "centered")
        return 0.5 * (dx - 1j * dy)

    def grad_phi_sq(self) -> np.ndarray:
        """|nabla phi|^2 per site from centered covariant differences."""
        dx = self.covariant_diff(self.phi, 0, "centered")
        dy = self.covariant_diff(self.phi, 1, "centered")
        return np.abs(dx) ** 2 + np.abs(dy) ** 2


# ----------------------------------------------------------------------------
# construction pieces
# ----------------------------------------------------------------------------

def _singular_factor(grid: TorusGrid, points: np.ndarray):
    """Product of theta_1 factors and Landau background, plus the constant
    x-moment phase that keeps the seam transition divisor-independent."""
    L = grid.side_length
    x, y = grid.site_coords()
    s0 = np.ones((grid.n, grid.n), dtype=complex)
    for p in points:
        u = (np.pi / L) * ((x - p[0]) + 1j * (y - p[1]))
        s0 *= theta1(u) * np.exp(-(np.pi / L ** 2) * (y - p[1]) ** 2)
    kappa = -(2.0 * np.pi / L ** 2) * float(np.sum(points[:, 0]))
    s0 *= np.exp(1j * kappa * y)
    return s0, kappa


def _spectral_laplacian(grid: TorusGrid, v: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(grid.spectral_k2() * np.fft.fft2(v)).real


def _newton_remainder(grid: TorusGrid, e_h0: np.ndarray, tau: float, d: int,
                      v0: np.ndarray | None):
    """Solve Delta v + e_h0 * exp(v) = tau - 4*pi*d/area at the grid nodes."""
    const = tau - 4.0 * np.pi * d / grid.area
    if const <= 0.0:
        raise ConfigurationError("below Bradlow limit")
    k2 = grid.spectral_k2()
    mean_e0 = float(np.mean(e_h0))
    if v0 is None:
        v = np.full((grid.n, grid.n), np.log(const / mean_e0))
    else:
        v = v0.copy()

    def residual(vv):
        return _spectral_laplacian(grid, vv) + e_h0 * np.exp(vv) - const

    res = residual(v)
    sup = float(np.max(np.abs(res)))
    tol = NEWTON_TOL * tau
    iters = 0
    while sup > tol:
        if iters >= NEWTON_MAXITER:
            raise SolverError(f"Newton stalled at residual {sup:.3e}")
        e = e_h0 * np.exp(v)
        shift = max(float(np.mean(e)), 1e-12 * tau)
        inv = 1.0 / (k2 + shift)

        def apply_j(p):
            return _spectral_laplacian(grid, p) + e * p

        def precond(r):
            return np.fft.ifft2(inv * np.fft.fft2(r)).real

        delta = cg(apply_j, -res, precond, tol=1e-12, maxiter=4000,
                   name="newton-cg")
        step = 1.0
        for _ in range(60):
            trial = v + step * delta
            res_t = residual(trial)
            sup_t = float(np.max(np.abs(res_t)))
            if sup_t < sup:
                v, res, sup = trial, res_t, sup_t
                break
            step *= 0.5
        else:
            raise SolverError("Newton line search failed")
        iters += 1
    return v, sup, iters


def _link_integrals(grid: TorusGrid, v: np.ndarray):
    """Exact line integrals of (1/2)*star(dv) over x- and y-links.

    Returns (Vx, Vy) where Vx[i,j] integrates -dv/dy/2 over the x-link at
    (i,j) and Vy[i,j] integrates +dv/dx/2 over the y-link.  Exact for the
    trigonometric interpolant of v.
    """
    n, h = grid.n, grid.spacing
    vh = np.fft.fft2(v)
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    k_deriv = k.copy()
    k_deriv[n // 2] = 0.0          # odd operator on a real field

    def window(karr):
        w = np.empty(n, dtype=complex)
        nz = karr != 0.0
        w[nz] = (np.exp(1j * karr[nz] * h) - 1.0) / (1j * karr[nz])
        w[~nz] = h
        return w

    kx = k.reshape(-1, 1)
    ky = k.reshape(1, -1)
    kx_d = k_deriv.reshape(-1, 1)
    ky_d = k_deriv.reshape(1, -1)
    wx = window(k).reshape(-1, 1)
    wy = window(k).reshape(1, -1)
    vx = np.fft.ifft2(vh * (-0.5j * ky_d) * wx).real
    vy = np.fft.ifft2(vh * (+0.5j * kx_d) * wy).real
    return vx, vy


def _assemble_links(grid: TorusGrid, points: np.ndarray, v: np.ndarray,
                    kappa: float, d: int) -> np.ndarray:
    L, h, n = grid.side_length, grid.spacing, grid.n
    vx, vy = _link_integrals(grid, v)
    yrow = np.arange(n) * h
    b = (2.0 * np.pi * h / L ** 2) * np.sum(yrow[None, :] - points[:, 1][:, None], axis=0)
    links = np.empty((2, n, n), dtype=complex)
    links[0] = np.exp(-1j * (b[None, :] + vx))
    links[1] = np.exp(-1j * (vy - kappa * h))
    # bundle transitions across the two seams
    links[0][n - 1, :] *= (-1.0) ** d
    xcol = np.arange(n) * h
    links[1][:, n - 1] *= np.exp(-1j * d * (np.pi - 2.0 * np.pi * xcol / L))
    return links


def _constant_solution(grid: TorusGrid, tau: float):
    phi = np.full((grid.n, grid.n), np.sqrt(tau), dtype=complex)
    links = np.ones((2, grid.n, grid.n), dtype=complex)
    w = np.zeros((grid.n, grid.n))
    field = VortexField(grid, tau, Divisor(np.zeros((0, 2))), phi, links, w,
                        0.0, v=np.zeros((grid.n, grid.n)), kappa=0.0,
                        points_raw=np.zeros((0, 2)))
    report = TaubesSolveReport(0, 0.0, np.log(np.abs(phi) ** 2), 0.0)
    return field, report


def solve_vortex(divisor: Divisor | np.ndarray, tau: float, grid: TorusGrid,
                 tol: float = DEFAULT_FIELD_TOL, *,
                 allow_unresolved: bool = False,
                 warm_v: np.ndarray | None = None):
    """Construct the vortex field for a prescribed simple divisor.

    ``divisor`` may carry points outside the fundamental domain (used by
    loop transport); the field then differs from the reduced one by the
    exact quasi-periodicity gauge, continuously in the points.
    """
    t0 = time.perf_counter()
    if isinstance(divisor, Divisor):
        points = divisor.points
    else:
        points = np.atleast_2d(np.asarray(divisor, dtype=float))
        if points.size == 0:
            points = points.reshape(0, 2)
    d = points.shape[0]
    if d == 0:
        if tau <= 0:
            raise ConfigurationError("tau must be positive")
        return _constant_solution(grid, tau)

    tau0 = bradlow_limit(d, grid.area)
    if tau <= tau0 * (1.0 + 1e-9):
        raise ConfigurationError("below Bradlow limit")
    if grid.spacing > CORE_RESOLUTION / np.sqrt(tau) and not allow_unresolved:
        raise ConfigurationError(
            f"grid does not resolve the core scale: spacing {grid.spacing:.4g}"
            f" > {CORE_RESOLUTION / np.sqrt(tau):.4g}")
    reduced = Divisor(points % grid.side_length)
    reduced.validate_simple(grid)

    s0, kappa = _singular_factor(grid, points)
    e_h0 = np.abs(s0) ** 2
    v, scal_res, iters = _newton_remainder(grid, e_h0, tau, d, warm_v)
    phi = np.exp(0.5 * v) * s0
    links = _assemble_links(grid, points, v, kappa, d)
    w = 0.5 * (tau - np.abs(phi) ** 2)

    field = VortexField(grid, tau, reduced, phi, links, w, 0.0,
                        v=v, kappa=kappa, points_raw=points.copy())
    deg = chern_degree(links, grid)
    if deg != d:
        raise SolverError(f"constructed field has degree {deg}, wanted {d}")
    r1, r2 = vortex_residual(field)
    nres = max(float(np.max(r1)) / tau, float(np.max(r2)) / np.sqrt(tau))
    field.residual_sup = nres
    if tol is not None and nres > tol and not allow_unresolved:
        raise SolverError(
            f"field residual {nres:.3e} exceeds tolerance {tol:.3e}")
    with np.errstate(divide="ignore"):
        h_field = np.log(np.maximum(np.abs(phi) ** 2, 1e-300))
    report = TaubesSolveReport(iters, scal_res, h_field,
                               time.perf_counter() - t0)
    return field, report


# ----------------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------------

def gl_energy(field: VortexField, lam: float = 1.0) -> float:
    """Discrete Ginzburg-Landau free energy; 2*pi*tau*d for minimizers."""
    grid = field.grid
    h = grid.spacing
    ilf = plaquette_args(field.links) / h ** 2
    grad_sq = (np.abs(field.covariant_diff(field.phi, 0, "forward")) ** 2
               + np.abs(field.covariant_diff(field.phi, 1, "forward")) ** 2)
    dens = ilf ** 2 + grad_sq + lam * field.w ** 2
    return float(np.sum(dens) * h ** 2)


def vortex_residual(field: VortexField):
    """Pointwise residuals of the two first-order vortex equations.

    r1 compares plaquette flux density with w averaged to plaquette centers;
    r2 is |dbar_nabla phi| from centered covariant differences.
    """
    grid = field.grid
    h = grid.spacing
    ilf = plaquette_args(field.links) / h ** 2
    w = field.w
    w_plaq = 0.25 * (w + np.roll(w, -1, axis=0) + np.roll(w, -1, axis=1)
                     + np.roll(np.roll(w, -1, axis=0), -1, axis=1))
    r1 = np.abs(ilf - w_plaq)
    dbar = 0.5 * (field.covariant_diff(field.phi, 0, "centered")
                  + 1j * field.covariant_diff(field.phi, 1, "centered"))
    r2 = np.sqrt(2.0) * np.abs(dbar)
    return r1, r2


def fit_exponential_decay(dists, vals, tau: float, lo: float, hi: float,
                          min_samples: int = 20) -> DecayFit:
    """Log-linear fit of vals ~ c*tau*exp(-sqrt(tau)*dist/c) on [lo, hi]."""
    dists = np.asarray(dists).ravel()
    vals = np.asarray(vals).ravel()
    floor = 1e-14 * max(float(np.max(vals)), 1e-300)
    mask = (dists >= lo) & (dists <= hi) & (vals > floor)
    if int(np.sum(mask)) < min_samples:
        raise DiagnosticError(
            f"only {int(np.sum(mask))} decay samples in [{lo:.3g}, {hi:.3g}]")
    x = dists[mask]
    y = np.log(vals[mask])
    _, slope, r2 = linear_fit(x, y)
    exponent = -slope
    c_fit = np.sqrt(tau) / exponent if exponent > 0 else np.inf
    samples = list(zip(x.tolist(), np.exp(y).tolist()))
    return DecayFit(float(c_fit), float(exponent), float(r2), samples)


def decay_window(tau: float, grid: TorusGrid):
    """Fit window [lo, hi]: outside the core, inside the injectivity radius.

    The inner cutoff is 3/sqrt(tau) when the geometry allows it; for
    moderate tau on a small torus (where no pure asymptotic window exists)
    it is pulled in to keep the window nonempty.
    """
    hi = 0.9 * (grid.side_length / 2.0)
    return min(3.0 / np.sqrt(tau), 0.7 * hi), hi


def fit_vortex_tail(field: VortexField, vals: np.ndarray,
                    lo: float | None = None, hi: float | None = None,
                    min_samples: int = 20) -> DecayFit:
    """Fit the decay rate of a vortex-tail quantity on the torus.

    Uses the screened-kernel form  vals ~ C * sum_images exp(-b r)/sqrt(r)
    (3x3 periodic images of every divisor point), solved self-consistently
    for b.  This removes the saddle flattening between periodic images that
    biases a plain log-linear fit at moderate tau.
    """
    grid = field.grid
    tau = field.tau
    if lo is None or hi is None:
        lo_d, hi_d = decay_window(tau, grid)
        lo = lo_d if lo is None else lo
        hi = hi_d if hi is None else hi
    x, y = grid.site_coords()
    L = grid.side_length
    dists = dist_to_divisor(field.divisor, grid)
    vals = np.asarray(vals)
    floor = 1e-14 * max(float(np.max(vals)), 1e-300)
    mask = (dists >= lo) & (dists <= hi) & (vals > floor)
    if int(np.sum(mask)) < min_samples:
        raise DiagnosticError(
            f"only {int(np.sum(mask))} decay samples in [{lo:.3g}, {hi:.3g}]")

    def image_sum(b):
        tot = np.zeros_like(dists)
        for p in field.divisor.points:
            for mx in (-1, 0, 1):
                for my in (-1, 0, 1):
                    r = np.hypot(x - p[0] - mx * L, y - p[1] - my * L)
                    r = np.maximum(r, 1e-9)
                    tot += np.exp(-b * r) / np.sqrt(r)
        return tot

    b = np.sqrt(tau)
    r2 = 0.0
    dm = dists[mask]
    for _ in range(40):
        corr = np.exp(-b * dm) / np.sqrt(np.maximum(dm, 1e-3)) / image_sum(b)[mask]
        ylog = np.log(vals[mask] * corr * np.sqrt(dm))
        _, slope, r2 = linear_fit(dm, ylog)
        b_new = -slope
        if not np.isfinite(b_new) or b_new <= 0:
            raise DiagnosticError("tail fit failed to converge")
        if abs(b_new - b) < 1e-10 * b:
            b = b_new
            break
        b = b_new
    c_fit = np.sqrt(tau) / b
    samples = list(zip(dm.tolist(), vals[mask].tolist()))
    return DecayFit(float(c_fit), float(b), float(r2), samples)


def taubes_bounds_check(field: VortexField):
    """Max |phi|^2 and the fitted exponential decay of w + |grad phi|."""
    max_phi_sq = float(np.max(np.abs(field.phi) ** 2))
    vals = field.w + np.sqrt(field.grad_phi_sq())
    fit = fit_vortex_tail(field, vals)
    return max_phi_sq, fit

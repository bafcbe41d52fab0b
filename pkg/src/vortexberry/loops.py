"""Loop library on the symmetric product, shadows, windings and currents.

Tracks are stored as unreduced plane curves (one per divisor point); the
torus reduction happens downstream in the solver, which keeps the sampled
field family continuous across fundamental-domain boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, LoopClosureError
from .lattice import Divisor, GaugeTransform, TorusGrid, torus_dist

__all__ = [
    "LoopPath", "Shadow", "CyclePath", "make_loop", "shadow", "winding",
    "current_pairing", "cycle_pairing", "duality_matrix", "standard_test_forms",
]


@dataclass
class LoopPath:
    kind: str
    tracks: np.ndarray          # (d, samples+1, 2), unreduced coordinates
    basepoint: Divisor
    samples: int

    def positions(self, k: int) -> np.ndarray:
        """Divisor point positions at sample k."""
        return self.tracks[:, k, :]

    def moving(self) -> np.ndarray:
        """Boolean mask of tracks that actually move."""
        spans = np.ptp(self.tracks, axis=1)
        return np.any(spans > 1e-12, axis=1)

    def validate_regular(self, grid: TorusGrid):
        """Pairwise track separation > 4*spacing at every sample."""
        d, K1, _ = self.tracks.shape
        for k in range(K1):
            pts = self.tracks[:, k, :]
            for a in range(d):
                for b in range(a + 1, d):
                    if torus_dist(pts[a], pts[b], grid) <= 4 * grid.spacing:
                        raise ConfigurationError(
                            f"loop approaches the big diagonal at sample {k}")


@dataclass
class Shadow:
    polylines: list            # list of (M, 2) closed polylines (unreduced)
    homology_class: tuple      # integer coefficients on (alpha, beta)


@dataclass
class CyclePath:
    name: str
    points: np.ndarray         # (M, 2) closed polyline, unreduced


def _circle(center, radius, t):
    ang = 2.0 * np.pi * t
    return np.stack([center[0] + radius * np.cos(ang),
                     center[1] + radius * np.sin(ang)], axis=-1)


def make_loop(kind: str, params: dict, divisor: Divisor,
              samples: int = 64) -> LoopPath:
    """Build one of the standard loops in the moduli space.

    bounding_circle: params radius (default 0.15), point_index, optional
        center; the chosen point traverses the circle counterclockwise
        starting at its divisor position.
    alpha_cycle / beta_cycle: params point_index; the point translates once
        around the chosen period.
    interchange: params indices (pair); the two points swap along the two
        halves of the circle through them (counterclockwise lens).
    custom: params tracks, an explicit (d, samples+1, 2) array.
    """
    pts = divisor.points
    d = divisor.d
    t = np.linspace(0.0, 1.0, samples + 1)
    tracks = np.repeat(pts[:, None, :], samples + 1, axis=1).astype(float)

    if kind == "bounding_circle":
        idx = int(params.get("point_index", 0))
        radius = float(params.get("radius", 0.15))
        if radius <= 0:
            raise ConfigurationError("bounding_circle needs radius > 0")
        center = params.get("center")
        if center is None:
            center = (pts[idx, 0] - radius, pts[idx, 1])
        center = np.asarray(center, dtype=float)
        if abs(np.hypot(*(pts[idx] - center)) - radius) > 1e-9:
            raise ConfigurationError("circle does not pass through the divisor point")
        ang0 = np.arctan2(pts[idx, 1] - center[1], pts[idx, 0] - center[0])
        ang = ang0 + 2.0 * np.pi * t
        tracks[idx] = np.stack([center[0] + radius * np.cos(ang),
                                center[1] + radius * np.sin(ang)], axis=-1)
    elif kind in ("alpha_cycle", "beta_cycle"):
        idx = int(params.get("point_index", 0))
        L = float(params.get("side_length", 1.0))
        step = np.array([L, 0.0]) if kind == "alpha_cycle" else np.array([0.0, L])
        tracks[idx] = pts[idx][None, :] + t[:, None] * step[None, :]
    elif kind == "interchange":
        ia, ib = params.get("indices", (0, 1))
        if d < 2:
            raise ConfigurationError("interchange needs at least two points")
        pa, pb = pts[ia], pts[ib]
        center = 0.5 * (pa + pb)
        radius = 0.5 * np.hypot(*(pb - pa))
        ang0 = np.arctan2(pa[1] - center[1], pa[0] - center[0])
        half = np.pi * t
        tracks[ia] = np.stack([center[0] + radius * np.cos(ang0 + half),
                               center[1] + radius * np.sin(ang0 + half)], axis=-1)
        tracks[ib] = np.stack([center[0] + radius * np.cos(ang0 + np.pi + half),
                               center[1] + radius * np.sin(ang0 + np.pi + half)],
                              axis=-1)
    elif kind == "custom":
        tracks = np.asarray(params["tracks"], dtype=float)
        if tracks.shape[0] != d or tracks.shape[1] != samples + 1:
            raise ConfigurationError("custom tracks shape mismatch")
    else:
        raise ConfigurationError(f"unknown loop kind {kind!r}")

    return LoopPath(kind, tracks, divisor, samples)


def shadow(loop: LoopPath, side_length: float = 1.0) -> Shadow:
    """Oriented 1-cycle traced by the moving divisor points."""
    def closed_mod_l(a, b):
        r = (a - b) / side_length
        return np.max(np.abs(r - np.rint(r))) < 1e-9

    moving = loop.moving()
    open_tracks = [loop.tracks[i] for i in range(loop.tracks.shape[0]) if moving[i]]
    polylines = []
    used = [False] * len(open_tracks)
    for i, tr in enumerate(open_tracks):
        if used[i]:
            continue
        chain = tr.copy()
        used[i] = True
        guard = 0
        # concatenate open tracks (interchange) until the chain closes mod L
        while not closed_mod_l(chain[-1], chain[0]):
            found = False
            for j, other in enumerate(open_tracks):
                if not used[j] and np.max(np.abs(other[0] - chain[-1])) < 1e-9:
                    chain = np.vstack([chain, other[1:]])
                    used[j] = True
                    found = True
                    break
            if not found:
                raise LoopClosureError("open tracks do not concatenate to a cycle")
            guard += 1
            if guard > len(open_tracks):
                raise LoopClosureError("shadow concatenation did not terminate")
        polylines.append(chain)
    hom = np.zeros(2)
    for chain in polylines:
        hom += (chain[-1] - chain[0]) / side_length
    hom_int = (int(np.rint(hom[0])), int(np.rint(hom[1])))
    if np.max(np.abs(np.array(hom_int) - hom)) > 1e-9:
        raise LoopClosureError("shadow homology class is not integral")
    return Shadow(polylines, hom_int)


def dist_to_shadow(sh: Shadow, grid: TorusGrid, refine: int = 4) -> np.ndarray:
    """Per-site torus distance to the shadow polylines."""
    pts = []
    for chain in sh.polylines:
        for a, b in zip(chain[:-1], chain[1:]):
            for s in np.linspace(0.0, 1.0, refine, endpoint=False):
                pts.append(a + s * (b - a))
    if not pts:
        return np.full((grid.n, grid.n), np.inf)
    pts = np.asarray(pts) % grid.side_length
    x, y = grid.site_coords()
    L = grid.side_length
    best = np.full((grid.n, grid.n), np.inf)
    for p in pts:
        dx = np.abs(x - p[0]) % L
        dx = np.minimum(dx, L - dx)
        dy = np.abs(y - p[1]) % L
        dy = np.minimum(dy, L - dy)
        best = np.minimum(best, np.hypot(dx, dy))
    return best


def _sample_phase_along(g: np.ndarray, grid: TorusGrid, path: np.ndarray,
                        max_step: float = np.pi / 2):
    """Accumulated phase of g along a sampled path (nearest-site values)."""
    n, L = grid.n, grid.side_length
    idx = np.rint(np.asarray(path) / grid.spacing).astype(int) % n
    vals = g[idx[:, 0], idx[:, 1]]
    incs = np.angle(vals[1:] * np.conj(vals[:-1]))
    if incs.size and np.max(np.abs(incs)) >= max_step:
        raise ConfigurationError(
            "phase step too large along path; refine the grid or cycle")
    return np.concatenate([[0.0], np.cumsum(incs)]) + np.angle(vals[0])


def _resample(path: np.ndarray, spacing: float) -> np.ndarray:
    """Resample a polyline to roughly half-grid resolution."""
    out = [path[0]]
    for a, b in zip(path[:-1], path[1:]):
        seg = np.hypot(*(b - a))
        m = max(int(np.ceil(seg / (0.5 * spacing))), 1)
        for s in range(1, m + 1):
            out.append(a + (b - a) * s / m)
    return np.asarray(out)


def winding(g: GaugeTransform | np.ndarray, cycle: CyclePath, grid: TorusGrid) -> int:
    """Degree of g restricted to the cycle; exactly an integer."""
    gv = g.g if isinstance(g, GaugeTransform) else np.asarray(g)
    path = _resample(cycle.points, grid.spacing)
    if np.max(np.abs(path[-1] - path[0])) > 1e-9:
        # closed on the torus: allow closure up to full periods
        if np.max(np.abs((path[-1] - path[0]) / grid.side_length
                         - np.rint((path[-1] - path[0]) / grid.side_length))) > 1e-9:
            raise ConfigurationError("cycle is not closed on the torus")
    phase = _sample_phase_along(gv, grid, path)
    total = (phase[-1] - phase[0]) / (2.0 * np.pi)
    wind = int(np.rint(total))
    if abs(total - wind) > 1e-6:
        raise ConfigurationError(f"winding {total} is not an integer")
    return wind


def gauge_current(g: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Real 1-form components of (1/2 pi i) g^-1 dg from link increments."""
    h = grid.spacing
    ax = np.angle(np.roll(g, -1, axis=0) * np.conj(g)) / (2.0 * np.pi * h)
    ay = np.angle(np.roll(g, -1, axis=1) * np.conj(g)) / (2.0 * np.pi * h)
    return np.stack([ax, ay])


def current_pairing(g: GaugeTransform | np.ndarray, b, grid: TorusGrid) -> float:
    """Integral of the holonomy current against a smooth test 1-form.

    ``b`` is a callable (x, y) -> (B_x, B_y) or an array (2, n, n).
    """
    gv = g.g if isinstance(g, GaugeTransform) else np.asarray(g)
    a = gauge_current(gv, grid)
    if np.max(np.abs(a)) * 2.0 * np.pi * grid.spacing >= np.pi / 2:
        raise ConfigurationError("holonomy too rough for the current pairing")
    # link components -> site collocation by adjacent-link averaging
    ax = 0.5 * (a[0] + np.roll(a[0], 1, axis=0))
    ay = 0.5 * (a[1] + np.roll(a[1], 1, axis=1))
    x, y = grid.site_coords()
    if callable(b):
        bx, by = b(x, y)
    else:
        bx, by = b[0], b[1]
    dens = ax * by - ay * bx
    return float(np.sum(dens) * grid.spacing ** 2)


def cycle_pairing(sh: Shadow, b, grid: TorusGrid) -> float:
    """Line integral of the test form along the shadow as a 1-current.

    The orientation dual to the holonomy current in our ambient
    conventions (plaquette flux sum = +2 pi d) is the reverse of the
    track traversal; the integral is taken along that orientation.
    """
    total = 0.0
    for chain in sh.polylines:
        path = _resample(chain[::-1], grid.spacing / 4.0)
        mids = 0.5 * (path[1:] + path[:-1]) % grid.side_length
        dl = path[1:] - path[:-1]
        if callable(b):
            bx, by = b(mids[:, 0], mids[:, 1])
        else:
            raise ConfigurationError("cycle_pairing needs a callable test form")
        total += float(np.sum(bx * dl[:, 0] + by * dl[:, 1]))
    return total


def standard_test_forms(side_length: float = 1.0):
    """Five fixed band-limited test 1-forms with their exact coefficients."""
    L = side_length
    k = 2.0 * np.pi / L

    def f1(x, y):
        return np.ones_like(x), np.zeros_like(y)

    def f2(x, y):
        return np.zeros_like(x), np.ones_like(y)

    def f3(x, y):
        return np.cos(k * y), np.zeros_like(y)

    def f4(x, y):
        return np.zeros_like(x), np.sin(k * x)

    def f5(x, y):
        return np.sin(k * (x + y)), np.cos(k * x) * np.cos(k * y)

    return [f1, f2, f3, f4, f5]


def form_norms(b, grid: TorusGrid):
    """(sup |b|, C^1 norm) of a test form, evaluated spectrally."""
    x, y = grid.site_coords()
    bx, by = b(x, y)
    sup0 = float(np.max(np.hypot(bx, by)))
    kx, ky = grid.wavenumbers(zero_nyquist=True)
    grads = []
    for comp in (bx, by):
        ch = np.fft.fft2(comp)
        gx = np.fft.ifft2(1j * kx * ch).real
        gy = np.fft.ifft2(1j * ky * ch).real
        grads.append(np.hypot(gx, gy))
    sup1 = float(np.max(np.maximum(*grads)))
    return sup0, sup0 + sup1


def alpha_beta_cycles(grid: TorusGrid, x0: float, y0: float):
    """Test cycles: straight period loops through (x0, y0)."""
    L = grid.side_length
    m = 4 * grid.n
    s = np.linspace(0.0, L, m + 1)
    alpha = CyclePath("alpha", np.stack([x0 + s, np.full(m + 1, y0)], axis=-1))
    beta = CyclePath("beta", np.stack([np.full(m + 1, x0), y0 + s], axis=-1))
    return alpha, beta


def duality_matrix(tau: float, grid: TorusGrid, steps: int = 64,
                   divisor: Divisor | None = None, tol: float = None,
                   offset: float = 0.5, min_steps: int = 64,
                   phase_check: float = 0.1):
    """Windings of the cycle-loop holonomies on the offset test cycles.

    Entry (i, j) = winding(holonomy of loop i, test cycle j) for
    i, j in {alpha, beta}; Poincare duality predicts [[0, 1], [-1, 0]].
    """
    from .berry import parallel_transport
    from .vortex import DEFAULT_FIELD_TOL

    if divisor is None:
        divisor = Divisor([[0.5, 0.5]])
    if tol is None:
        tol = DEFAULT_FIELD_TOL
    p = divisor.points[0]
    L = grid.side_length
    mat = np.zeros((2, 2), dtype=int)
    reports = {}
    for i, kind in enumerate(("alpha_cycle", "beta_cycle")):
        loop = make_loop(kind, {"point_index": 0, "side_length": L}, divisor,
                         samples=steps)
        # test cycles pass through the point antipodal to the basepoint:
        # maximally offset from the straight shadow and from the vortex
        # cores, where the closure-ratio phase is not resolvable
        x0 = (p[0] + offset * L) % L
        y0 = (p[1] + offset * L) % L
        alpha, beta = alpha_beta_cycles(grid, x0, y0)
        rep = parallel_transport(loop, tau, grid, steps, tol=tol,
                                 cycles=[alpha, beta], min_steps=min_steps,
                                 phase_check=phase_check)
        mat[i, 0] = rep.winding["alpha"]
        mat[i, 1] = rep.winding["beta"]
        reports[kind] = rep
    return mat, reports

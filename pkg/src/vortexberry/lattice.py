"""Flat-torus grid, field containers, gauge action and the (0,1) dictionary.

Arrays are indexed ``field[i, j]`` with ``i`` the x-index and ``j`` the
y-index; all fields are periodic with period ``n`` in both indices.  Link
fields have shape ``(2, n, n)``: ``links[0]`` holds the +x transporters,
``links[1]`` the +y transporters (see conventions.py).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "TorusGrid", "Divisor", "GaugeTransform", "TangentVector",
    "build_grid", "torus_dist", "dist_to_divisor", "l2_inner",
    "to_antiholomorphic", "from_antiholomorphic", "gauge_apply",
    "plaquette_args", "chern_degree", "dump_field", "load_field",
]


@dataclass(frozen=True)
class TorusGrid:
    """Uniform n-by-n grid on the square torus of the given side length."""

    n: int
    side_length: float = 1.0

    def __post_init__(self):
        if self.n % 2 != 0:
            raise ConfigurationError("n must be even")
        if self.n < 8:
            raise ConfigurationError(f"n must be >= 8, got {self.n}")
        if self.side_length <= 0:
            raise ConfigurationError("side_length must be positive")

    @property
    def spacing(self) -> float:
        return self.side_length / self.n

    @property
    def area(self) -> float:
        return self.side_length ** 2

    def site_coords(self):
        """Arrays x[i,j], y[i,j] of site positions in [0, L)^2."""
        s = np.arange(self.n) * self.spacing
        return np.meshgrid(s, s, indexing="ij")

    def wavenumbers(self, zero_nyquist: bool = False):
        """Signed spectral wavenumbers kx[i,j], ky[i,j] (units 2*pi/L).

        ``zero_nyquist=True`` zeroes the n/2 mode, required for odd
        (first-derivative) spectral operators on real fields.
        """
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        if zero_nyquist:
            k = k.copy()
            k[self.n // 2] = 0.0
        return np.meshgrid(k, k, indexing="ij")

    def spectral_k2(self):
        """Multiplier of the spectral Laplacian Delta = -(dxx+dyy): |k|^2."""
        kx, ky = self.wavenumbers()
        return kx ** 2 + ky ** 2

    def lap5_eigs(self):
        """Fourier eigenvalues of the 5-point Laplacian Delta_5 (>= 0)."""
        h = self.spacing
        kx, ky = self.wavenumbers()
        return (4.0 - 2.0 * np.cos(kx * h) - 2.0 * np.cos(ky * h)) / h ** 2


def build_grid(n: int, side_length: float = 1.0) -> TorusGrid:
    return TorusGrid(int(n), float(side_length))


@dataclass(frozen=True)
class Divisor:
    """Ordered list of d points in the fundamental domain (shape (d, 2))."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.shape[1] != 2:
            raise ConfigurationError("divisor points must be (d, 2)")
        object.__setattr__(self, "points", pts)

    @property
    def d(self) -> int:
        return self.points.shape[0]

    def validate_simple(self, grid: TorusGrid):
        """Simplicity at grid resolution: pairwise distance > 2*spacing."""
        for a in range(self.d):
            for b in range(a + 1, self.d):
                if torus_dist(self.points[a], self.points[b], grid) <= 2 * grid.spacing:
                    raise ConfigurationError(
                        "divisor not simple at grid resolution: points "
                        f"{a} and {b} closer than 2*spacing")


@dataclass
class GaugeTransform:
    """Unit-modulus function on sites; optionally with a real phase lift."""

    g: np.ndarray
    phase_lift: np.ndarray | None = None

    def __post_init__(self):
        if np.max(np.abs(np.abs(self.g) - 1.0)) > 1e-12:
            raise ConfigurationError("gauge transform must be unit modulus")
        if self.phase_lift is not None:
            err = np.max(np.abs(np.exp(2j * np.pi * self.phase_lift) - self.g))
            if err > 1e-10:
                raise ConfigurationError("phase_lift inconsistent with g")


@dataclass
class TangentVector:
    """Tangent direction in the (0,1) representation.

    ``alpha`` is the unitary coordinate of the Omega^{0,1} part (per site),
    ``psi`` the L-valued section (per site).  The real 1-form components are
    the pointwise dictionary A_x = Im(alpha), A_y = -Re(alpha).
    """

    alpha: np.ndarray
    psi: np.ndarray

    def oneform(self) -> np.ndarray:
        """Real 1-form components, shape (2, n, n)."""
        return np.stack([np.imag(self.alpha), -np.real(self.alpha)])

    def __add__(self, other):
        return TangentVector(self.alpha + other.alpha, self.psi + other.psi)

    def __sub__(self, other):
        return TangentVector(self.alpha - other.alpha, self.psi - other.psi)

    def __mul__(self, c):
        return TangentVector(c * self.alpha, c * self.psi)

    __rmul__ = __mul__

    def copy(self):
        return TangentVector(self.alpha.copy(), self.psi.copy())


def torus_dist(x, y, grid: TorusGrid) -> float:
    """Shortest distance between two points over the period lattice."""
    L = grid.side_length
    delta = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % L
    delta = np.minimum(delta, L - delta)
    return float(np.hypot(delta[..., 0], delta[..., 1]))


def _wrapped_delta(coord: np.ndarray, p: float, L: float) -> np.ndarray:
    d = np.abs(coord - p) % L
    return np.minimum(d, L - d)


def dist_to_divisor(divisor: Divisor, grid: TorusGrid) -> np.ndarray:
    """Per-site distance to the nearest divisor point (dist_D)."""
    x, y = grid.site_coords()
    L = grid.side_length
    if divisor.d == 0:
        return np.full_like(x, np.inf)
    dists = []
    for p in divisor.points:
        dx = _wrapped_delta(x, p[0] % L, L)
        dy = _wrapped_delta(y, p[1] % L, L)
        dists.append(np.hypot(dx, dy))
    return np.min(dists, axis=0)


def l2_inner(u: TangentVector, v: TangentVector, grid: TorusGrid) -> float:
    """Discrete L2 metric: Riemann sum of a.a' + Re h(psi, psi')."""
    if u.alpha.shape != (grid.n, grid.n) or v.alpha.shape != (grid.n, grid.n):
        raise ConfigurationError("tangent vectors do not match the grid")
    s = np.sum(np.real(np.conj(u.alpha) * v.alpha))
    s += np.sum(np.real(np.conj(u.psi) * v.psi))
    return float(s * grid.spacing ** 2)


def l2_norm(u: TangentVector, grid: TorusGrid) -> float:
    return float(np.sqrt(max(l2_inner(u, u, grid), 0.0)))


def to_antiholomorphic(oneform: np.ndarray) -> np.ndarray:
    """Unitary pointwise dictionary (A_x, A_y) -> alpha (unitary coordinate)."""
    a = np.asarray(oneform)
    return 1j * a[0] - a[1]


def from_antiholomorphic(alpha: np.ndarray) -> np.ndarray:
    """Inverse of to_antiholomorphic."""
    return np.stack([np.imag(alpha), -np.real(alpha)])


def gauge_apply_links(g: np.ndarray, links: np.ndarray) -> np.ndarray:
    """Transport conjugation U -> g(end) U conj(g(start))."""
    out = np.empty_like(links)
    out[0] = np.roll(g, -1, axis=0) * links[0] * np.conj(g)
    out[1] = np.roll(g, -1, axis=1) * links[1] * np.conj(g)
    return out


def gauge_apply(g: GaugeTransform | np.ndarray, obj):
    """Apply a gauge transformation to a field or tangent vector."""
    gv = g.g if isinstance(g, GaugeTransform) else np.asarray(g)
    if isinstance(obj, TangentVector):
        return TangentVector(obj.alpha.copy(), gv * obj.psi)
    # late import; VortexField lives in vortex.py
    from .vortex import VortexField
    if isinstance(obj, VortexField):
        return obj._replace_fields(phi=gv * obj.phi,
                                   links=gauge_apply_links(gv, obj.links))
    raise TypeError(f"cannot gauge-transform {type(obj).__name__}")


def plaquette_args(links: np.ndarray) -> np.ndarray:
    """Principal argument of each plaquette holonomy, shape (n, n)."""
    ux, uy = links[0], links[1]
    p = ux * np.roll(uy, -1, axis=0) * np.conj(np.roll(ux, -1, axis=1)) * np.conj(uy)
    return np.angle(p)


def chern_degree(links: np.ndarray, grid: TorusGrid) -> int:
    """Total plaquette flux / 2*pi; exactly an integer for any link field."""
    args = plaquette_args(links)
    if np.max(np.abs(args)) >= np.pi - 0.1:
        raise ConfigurationError("field too rough for degree measurement")
    total = float(np.sum(args)) / (2.0 * np.pi)
    deg = int(np.rint(total))
    # sum of principal args of a closed link field is 2*pi*integer exactly
    if abs(total - deg) > 1e-8:
        raise ConfigurationError(
            f"plaquette flux sum {total} is not an integer multiple of 2*pi")
    return deg


# ----------------------------------------------------------------------------
# field dumps: one-line JSON header + raw little-endian float64, row-major,
# complex interleaved (re, im)
# ----------------------------------------------------------------------------

_KINDS = {"scalar", "complex", "oneform", "links"}


def dump_field(path, arr: np.ndarray, grid: TorusGrid, kind: str):
    if kind not in _KINDS:
        raise ConfigurationError(f"unknown field kind {kind!r}")
    arr = np.asarray(arr)
    count = int(np.prod(arr.shape))
    header = {"n": grid.n, "side_length": grid.side_length,
              "kind": kind, "count": count}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        if np.iscomplexobj(arr):
            flat = np.empty(2 * count, dtype="<f8")
            flat[0::2] = np.real(arr).ravel()
            flat[1::2] = np.imag(arr).ravel()
        else:
            flat = arr.astype("<f8").ravel()
        fh.write(flat.tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    n = header["n"]
    kind = header["kind"]
    count = header["count"]
    if kind in ("complex", "links"):
        arr = raw[0::2] + 1j * raw[1::2]
    else:
        arr = raw
    if kind == "links":
        arr = arr.reshape(2, n, n)
    elif kind == "oneform":
        arr = arr.reshape(2, n, n)
    else:
        arr = arr.reshape(n, n) if count == n * n else arr.reshape(-1, n, n)
    grid = TorusGrid(n, header["side_length"])
    return arr, grid, kind

"""Membership and envelope values for the set of constrained periodic relative orbits.

A periodic relative orbit (d0 = 0) traces, over one target revolution,

    x(nu) = (d1 s (1+rho) - d2 c (1+rho) + d3) / rho
    y(nu) = (d4 c + d5 s) / rho
    z(nu) = d1 c + d2 s

with s = sin(nu), c = cos(nu), rho = 1 + e c.  The admissible set collects
the parameter vectors whose whole trace stays inside a hovering box.  The
y and z face constraints reduce to anomaly-free quadratics in the
parameters; the x faces are handled by locating the in-track extrema
directly (root search on dx/dnu over one period).
"""
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import RelativeOrbitParams

GRID_POINTS = 720
_NEWTON_TOL = 1e-10
_NEWTON_MAX_ITER = 60


@dataclass(frozen=True)
class HoveringBox:
    """Axis-aligned hovering zone in LVLH relative position (m).

    The box must have positive extent on every axis and must not contain
    the frame origin (the target), so that staying inside is collision-safe.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        for lo, hi, name in (
            (self.x_min, self.x_max, "x"),
            (self.y_min, self.y_max, "y"),
            (self.z_min, self.z_max, "z"),
        ):
            if not lo < hi:
                raise ValueError(f"degenerate box: {name}_min={lo} !< {name}_max={hi}")
        if self.x_min < 0.0 < self.x_max and self.y_min < 0.0 < self.y_max and self.z_min < 0.0 < self.z_max:
            raise ValueError("hovering box must not contain the LVLH origin")

    def contains(self, x: float, y: float, z: float) -> bool:
        return (
            self.x_min <= x <= self.x_max
            and self.y_min <= y <= self.y_max
            and self.z_min <= z <= self.z_max
        )


@dataclass(frozen=True)
class EnvelopeValues:
    """Anomaly-free face functions; g <= 0 means the face holds for all nu.

    The y/z entries are the exact quadratic envelopes (m^2); the x entries
    come from the extremal search and are plain boundary distances (m).
    """

    g_xmin: float
    g_xmax: float
    g_ymin: float
    g_ymax: float
    g_zmin: float
    g_zmax: float

    def max_value(self) -> float:
        return max(self.g_xmin, self.g_xmax, self.g_ymin, self.g_ymax, self.g_zmin, self.g_zmax)


class InTrackGrids:
    """Per-eccentricity evaluation grids for the in-track trace x(nu).

    x(nu) is linear in (d1, d2, d3):  x = (d1 u + d2 v + d3)/rho, and its
    scaled derivative N = rho^2 dx/dnu is again linear with coefficient
    grids N1, N2, N3; likewise dN/dnu with M1, M2, M3.  Everything below
    depends only on e, so one instance is cached per eccentricity.
    """

    def __init__(self, e: float, n: int = GRID_POINTS):
        self.e = e
        nu = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        s, c = np.sin(nu), np.cos(nu)
        rho = 1.0 + e * c
        u = s * (1.0 + rho)
        v = -c * (1.0 + rho)
        up = 2.0 * c * rho - e
        vp = 2.0 * s * rho
        upp = -2.0 * s * (1.0 + 2.0 * e * c)
        vpp = 2.0 * (c + e * (2.0 * c**2 - 1.0))
        self.nu = nu
        self.f1 = u / rho
        self.f2 = v / rho
        self.f3 = 1.0 / rho
        self.n1 = up * rho + e * s * u
        self.n2 = vp * rho + e * s * v
        self.n3 = e * s
        self.m1 = upp * rho + e * c * u
        self.m2 = vpp * rho + e * c * v
        self.m3 = e * c


_GRID_CACHE: dict[float, InTrackGrids] = {}


def _grids(e: float) -> InTrackGrids:
    g = _GRID_CACHE.get(e)
    if g is None:
        g = InTrackGrids(e)
        if len(_GRID_CACHE) > 64:
            _GRID_CACHE.clear()
        _GRID_CACHE[e] = g
    return g


def _x_of_nu(nu, d1, d2, d3, e):
    s, c = np.sin(nu), np.cos(nu)
    rho = 1.0 + e * c
    return (d1 * s * (1.0 + rho) - d2 * c * (1.0 + rho) + d3) / rho


def _slope_terms(nu, d1, d2, d3, e):
    """N = rho^2 dx/dnu and its derivative, at scalar or array nu."""
    s, c = np.sin(nu), np.cos(nu)
    rho = 1.0 + e * c
    u = s * (1.0 + rho)
    v = -c * (1.0 + rho)
    up = 2.0 * c * rho - e
    vp = 2.0 * s * rho
    upp = -2.0 * s * (1.0 + 2.0 * e * c)
    vpp = 2.0 * (c + e * (2.0 * c**2 - 1.0))
    N = d1 * (up * rho + e * s * u) + d2 * (vp * rho + e * s * v) + d3 * e * s
    Np = d1 * (upp * rho + e * c * u) + d2 * (vpp * rho + e * c * v) + d3 * e * c
    return N, Np


def _refine_root_scalar(lo: float, hi: float, d1: float, d2: float, d3: float, e: float) -> float:
    """Float-arithmetic Newton for one slope root; ~an order of magnitude
    cheaper than the array path on single brackets."""
    sin, cos = math.sin, math.cos

    def terms(nu):
        s, c = sin(nu), cos(nu)
        rho = 1.0 + e * c
        u = s * (1.0 + rho)
        v = -c * (1.0 + rho)
        N = (
            d1 * ((2.0 * c * rho - e) * rho + e * s * u)
            + d2 * (2.0 * s * rho * rho + e * s * v)
            + d3 * e * s
        )
        Np = (
            d1 * (-2.0 * s * (1.0 + 2.0 * e * c) * rho + e * c * u)
            + d2 * (2.0 * (c + e * (2.0 * c**2 - 1.0)) * rho + e * c * v)
            + d3 * e * c
        )
        return N, Np

    n_lo, _ = terms(lo)
    nu = 0.5 * (lo + hi)
    for _ in range(_NEWTON_MAX_ITER):
        N, Np = terms(nu)
        if (N > 0.0) == (n_lo > 0.0):
            lo, n_lo = nu, N
        else:
            hi = nu
        cand = nu - N / Np if Np != 0.0 else 0.5 * (lo + hi)
        if not lo < cand < hi:
            cand = 0.5 * (lo + hi)
        if abs(cand - nu) < _NEWTON_TOL:
            return cand
        nu = cand
    return nu


def _refine_roots(lo, hi, d1, d2, d3, e):
    """Safeguarded Newton on N inside brackets (arrays of equal shape)."""
    nu = 0.5 * (lo + hi)
    lo = lo.copy()
    hi = hi.copy()
    n_lo, _ = _slope_terms(lo, d1, d2, d3, e)
    for _ in range(_NEWTON_MAX_ITER):
        N, Np = _slope_terms(nu, d1, d2, d3, e)
        # Shrink the bracket around the sign change before stepping.
        same = np.sign(N) == np.sign(n_lo)
        lo = np.where(same, nu, lo)
        n_lo = np.where(same, N, n_lo)
        hi = np.where(same, hi, nu)
        step = np.divide(N, Np, out=np.zeros_like(N), where=Np != 0.0)
        cand = nu - step
        out = (cand <= lo) | (cand >= hi)
        moved = np.where(out, 0.5 * (lo + hi), cand)
        done = float(np.max(np.abs(moved - nu))) < _NEWTON_TOL
        nu = moved
        if done:
            break
    return nu


def in_track_extrema(d1: float, d2: float, d3: float, e: float) -> tuple[float, float]:
    """Minimum and maximum of the in-track trace x(nu) over one period.

    Bracketing on a 720-point grid of the scaled slope N, Newton-refined
    to 1e-10 in nu; the grid values themselves are kept as candidates so
    a tangency missed by the sign scan cannot lose the extremum entirely.
    """
    g = _grids(e)
    xs = d1 * g.f1 + d2 * g.f2 + d3 * g.f3
    N = d1 * g.n1 + d2 * g.n2 + d3 * g.n3
    x_min = float(xs.min())
    x_max = float(xs.max())
    sign = np.signbit(N)
    flips = np.nonzero(sign != np.roll(sign, -1))[0]
    if flips.size:
        step = 2.0 * np.pi / g.nu.size
        for idx in flips:
            lo = g.nu[idx]
            root = _refine_root_scalar(lo, lo + step, d1, d2, d3, e)
            xr = float(_x_of_nu(root, d1, d2, d3, e))
            x_min = min(x_min, xr)
            x_max = max(x_max, xr)
    return x_min, x_max


class InTrackPencil:
    """In-track extrema along a line of parameter vectors base + lam * dir.

    Precomputes the grid traces of the base point and the direction once,
    so each evaluation is a single fused pass; small batches refine their
    slope roots with the scalar Newton, large ones with the array Newton.
    """

    def __init__(self, base, direction, e: float):
        self.e = e
        self.b = (float(base[0]), float(base[1]), float(base[2]))
        self.w = (float(direction[0]), float(direction[1]), float(direction[2]))
        g = _grids(e)
        self._g = g
        self.xb = self.b[0] * g.f1 + self.b[1] * g.f2 + self.b[2] * g.f3
        self.xd = self.w[0] * g.f1 + self.w[1] * g.f2 + self.w[2] * g.f3
        self.nb = self.b[0] * g.n1 + self.b[1] * g.n2 + self.b[2] * g.n3
        self.nd = self.w[0] * g.n1 + self.w[1] * g.n2 + self.w[2] * g.n3

    def _coeffs(self, lam: float):
        return (
            self.b[0] + lam * self.w[0],
            self.b[1] + lam * self.w[1],
            self.b[2] + lam * self.w[2],
        )

    def extrema_scalar(self, lam: float, refine: bool = True) -> tuple[float, float]:
        xs = self.xb + lam * self.xd
        x_min = float(xs.min())
        x_max = float(xs.max())
        if not refine:
            return x_min, x_max
        N = self.nb + lam * self.nd
        sign = np.signbit(N)
        flips = np.nonzero(sign != np.roll(sign, -1))[0]
        if flips.size:
            g = self._g
            step = 2.0 * np.pi / g.nu.size
            d1, d2, d3 = self._coeffs(lam)
            for idx in flips:
                lo = g.nu[idx]
                root = _refine_root_scalar(lo, lo + step, d1, d2, d3, self.e)
                xr = float(_x_of_nu(root, d1, d2, d3, self.e))
                x_min = min(x_min, xr)
                x_max = max(x_max, xr)
        return x_min, x_max

    def extrema(self, lam, refine: bool = True):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if refine and lam.size <= 4:
            pairs = [self.extrema_scalar(float(v), refine) for v in lam]
            return (
                np.array([p[0] for p in pairs]),
                np.array([p[1] for p in pairs]),
            )
        xs = self.xb[:, None] + np.multiply.outer(self.xd, lam)
        x_min = xs.min(axis=0)
        x_max = xs.max(axis=0)
        if not refine:
            return x_min, x_max
        N = self.nb[:, None] + np.multiply.outer(self.nd, lam)
        sign = np.signbit(N)
        flips = sign != np.roll(sign, -1, axis=0)
        rows, cols = np.nonzero(flips)
        if rows.size:
            g = self._g
            step = 2.0 * np.pi / g.nu.size
            lo = g.nu[rows]
            d1 = self.b[0] + lam[cols] * self.w[0]
            d2 = self.b[1] + lam[cols] * self.w[1]
            d3 = self.b[2] + lam[cols] * self.w[2]
            roots = _refine_roots(lo, lo + step, d1, d2, d3, self.e)
            xr = _x_of_nu(roots, d1, d2, d3, self.e)
            np.minimum.at(x_min, cols, xr)
            np.maximum.at(x_max, cols, xr)
        return x_min, x_max


def in_track_extrema_batch(base, direction, lam, e: float, refine: bool = True):
    """Extrema of x(nu) along the pencil base + lam * direction.

    Convenience wrapper over InTrackPencil for one-shot batches.
    """
    return InTrackPencil(base, direction, e).extrema(lam, refine=refine)


def envelope_yz(params: RelativeOrbitParams, box: HoveringBox, e: float):
    """Exact quadratic face envelopes for the y and z box faces (m^2)."""
    d1, d2, d4, d5 = params.d1, params.d2, params.d4, params.d5
    g_ymin = (d4 - e * box.y_min) ** 2 + d5**2 - box.y_min**2
    g_ymax = (d4 - e * box.y_max) ** 2 + d5**2 - box.y_max**2
    radial2 = d1**2 + d2**2
    g_zmin = radial2 - box.z_min**2
    g_zmax = radial2 - box.z_max**2
    return g_ymin, g_ymax, g_zmin, g_zmax


def envelope_x(params: RelativeOrbitParams, box: HoveringBox, e: float):
    """In-track face envelopes from the extremal search (m).

    Defined for periodic orbits; the periodicity defect d0 is ignored, so
    the caller must gate on |d0| first (is_admissible does).
    """
    x_lo, x_hi = in_track_extrema(params.d1, params.d2, params.d3, e)
    return box.x_min - x_lo, x_hi - box.x_max


def envelope_values(params: RelativeOrbitParams, box: HoveringBox, e: float) -> EnvelopeValues:
    g_xmin, g_xmax = envelope_x(params, box, e)
    g_ymin, g_ymax, g_zmin, g_zmax = envelope_yz(params, box, e)
    return EnvelopeValues(g_xmin, g_xmax, g_ymin, g_ymax, g_zmin, g_zmax)


def is_admissible(
    params: RelativeOrbitParams, box: HoveringBox, e: float, tol_periodicity: float = 1e-6
) -> bool:
    """True iff the orbit is periodic within tolerance and every face holds."""
    if abs(params.d0) > tol_periodicity:
        return False
    g_ymin, g_ymax, g_zmin, g_zmax = envelope_yz(params, box, e)
    if g_ymin > 0.0 or g_ymax > 0.0 or g_zmin > 0.0 or g_zmax > 0.0:
        return False
    g_xmin, g_xmax = envelope_x(params, box, e)
    return g_xmin <= 0.0 and g_xmax <= 0.0

"""Single-impulse reachability of the admissible set.

Out-of-plane and in-plane impulses are each parameterized by one scalar
(lambda).  For a state outside the admissible set, the machinery below
computes, at a given anomaly:

* the lambda interval whose landing point is admissible (landing interval),
* the lambda values allowed by the thruster dead-zone and saturation,
* their intersection (a union of at most two intervals), its total length
  L, a continuous depth indicator G <= 0 built from the face-envelope
  minima over that union, and the forward-difference slope of G, and
* membership of the region of attraction: the set of states for which the
  landing windows have positive total length somewhere over the next
  revolution.
"""
import math
from dataclasses import dataclass

import numpy as np

from .admissible import HoveringBox, InTrackPencil
from .dynamics import (
    RelativeOrbitParams,
    TargetOrbit,
    ThrusterLimits,
    impulse_input_submatrices,
    parameter_transition,
    radius_ratio,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_LAMBDA_TOL = 1e-9
_PROBES = 64


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"interval with lo={self.lo} > hi={self.hi}")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)


class IntervalUnion:
    """Finite union of disjoint closed intervals, kept sorted."""

    __slots__ = ("components",)

    def __init__(self, components=()):
        comps = sorted((c for c in components if c is not None), key=lambda c: c.lo)
        merged: list[Interval] = []
        for c in comps:
            if merged and c.lo <= merged[-1].hi:
                merged[-1] = Interval(merged[-1].lo, max(merged[-1].hi, c.hi))
            else:
                merged.append(c)
        self.components = tuple(merged)

    def __repr__(self):
        return "IntervalUnion(%s)" % ", ".join(f"[{c.lo:g}, {c.hi:g}]" for c in self.components)

    def __eq__(self, other):
        return isinstance(other, IntervalUnion) and self.components == other.components

    @property
    def is_empty(self) -> bool:
        return not self.components

    def total_length(self) -> float:
        return sum(c.length for c in self.components)

    def endpoints(self) -> list[float]:
        out = []
        for c in self.components:
            out.extend((c.lo, c.hi))
        return out

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(c.lo - tol <= x <= c.hi + tol for c in self.components)

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for a in self.components:
            for b in other.components:
                lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
                if lo <= hi:
                    out.append(Interval(lo, hi))
        return IntervalUnion(out)

    @classmethod
    def from_interval(cls, interval: Interval | None) -> "IntervalUnion":
        return cls(() if interval is None else (interval,))


@dataclass(frozen=True)
class InPlaneControlBasis:
    """Structure of periodicity-preserving in-plane impulses.

    Any impulse that zeroes the post-impulse periodicity defect is
    lambda * b_perp + dv0, with b_perp the unit kernel direction of the
    d0 row of the in-plane input map and dv0 the minimum-norm particular
    compensation of the current d0.
    """

    b_perp: np.ndarray
    dv0: np.ndarray

    def delta_v(self, lam) -> np.ndarray:
        """In-plane (x, z) impulse for one or many lambda values."""
        lam = np.asarray(lam, dtype=float)
        return np.multiply.outer(lam, self.b_perp) + self.dv0


@dataclass(frozen=True)
class ReachabilityReport:
    """Instantaneous reachability snapshot for both motion planes."""

    lambda_sat_xz: IntervalUnion
    lambda_sat_y: IntervalUnion
    L_xz: float
    L_y: float
    G_xz: float
    G_y: float
    G_nu_xz: float
    G_nu_y: float


def _quad_sublevel(A: float, B: float, C: float) -> Interval | None:
    """Solution interval of A x^2 + B x + C <= 0 with A > 0, or None."""
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return None
    r = math.sqrt(disc)
    return Interval((-B - r) / (2.0 * A), (-B + r) / (2.0 * A))


def _quad_min_over(A: float, B: float, C: float, union: IntervalUnion) -> float:
    """Minimum of an upward quadratic over an interval union."""
    def val(x):
        return (A * x + B) * x + C

    vertex = -B / (2.0 * A)
    best = math.inf
    for comp in union.components:
        best = min(best, val(comp.clamp(vertex)))
    return best


def in_plane_control_basis(d0: float, nu: float, orbit: TargetOrbit) -> InPlaneControlBasis:
    """Kernel direction and minimum-norm particular impulse for the d0 row.

    Sign convention: the larger-magnitude component of b_perp is positive
    (first component wins a tie).
    """
    e = orbit.e
    s = math.sin(nu)
    rho = radius_ratio(nu, e)
    pref = 1.0 / (orbit.k2 * (e**2 - 1.0) * rho)
    row = np.array([rho**2, -e * s * rho]) * pref
    kernel = np.array([e * s, rho])
    kernel /= math.hypot(kernel[0], kernel[1])
    idx = 0 if abs(kernel[0]) >= abs(kernel[1]) else 1
    if kernel[idx] < 0.0:
        kernel = -kernel
    dv0 = -d0 * row / float(row @ row)
    return InPlaneControlBasis(b_perp=kernel, dv0=dv0)


def thruster_feasible_out_of_plane(limits: ThrusterLimits) -> IntervalUnion:
    """Out-of-plane lambda values compatible with dead-zone and saturation."""
    return IntervalUnion(
        (
            Interval(-limits.dv_max, -limits.dv_min),
            Interval(limits.dv_min, limits.dv_max),
        )
    )


def _feasible_in_plane_from_basis(basis: InPlaneControlBasis, limits: ThrusterLimits) -> IntervalUnion:
    # ||lam b + dv0||^2 = lam^2 + 2 b.dv0 lam + ||dv0||^2 since ||b|| = 1.
    b = float(basis.b_perp @ basis.dv0)
    c = float(basis.dv0 @ basis.dv0)
    disc_sat = b * b - c + limits.dv_max**2
    if disc_sat < 0.0:
        return IntervalUnion()
    r_sat = math.sqrt(disc_sat)
    disc_dz = b * b - c + limits.dv_min**2
    if disc_dz < 0.0:
        # The compensation alone already exceeds the minimum bit.
        return IntervalUnion((Interval(-b - r_sat, -b + r_sat),))
    r_dz = math.sqrt(disc_dz)
    return IntervalUnion(
        (
            Interval(-b - r_sat, -b - r_dz),
            Interval(-b + r_dz, -b + r_sat),
        )
    )


def thruster_feasible_in_plane(
    d0: float, nu: float, orbit: TargetOrbit, limits: ThrusterLimits
) -> IntervalUnion:
    """In-plane lambda values whose full impulse respects both thrust bounds."""
    return _feasible_in_plane_from_basis(in_plane_control_basis(d0, nu, orbit), limits)


def landing_interval_out_of_plane(
    d_y, nu: float, orbit: TargetOrbit, box: HoveringBox
) -> Interval | None:
    """Lambda interval whose out-of-plane landing satisfies both y faces."""
    e = orbit.e
    s, c = math.sin(nu), math.cos(nu)
    k2rho = orbit.k2 * radius_ratio(nu, e)
    b1, b2 = -s / k2rho, c / k2rho
    A = b1 * b1 + b2 * b2
    interval = None
    for w in (box.y_min, box.y_max):
        p = float(d_y[0]) - e * w
        q = float(d_y[1])
        face = _quad_sublevel(A, 2.0 * (p * b1 + q * b2), p * p + q * q - w * w)
        if face is None:
            return None
        if interval is None:
            interval = face
        else:
            lo, hi = max(interval.lo, face.lo), min(interval.hi, face.hi)
            if lo > hi:
                return None
            interval = Interval(lo, hi)
    return interval


class _InPlaneLanding:
    """Shared geometry for one (state, anomaly): landing pencil and faces.

    The admissible landing condition along lambda is the intersection of
    two radial quadratics (z faces) with the two in-track face conditions
    evaluated by the extremal search; the in-track faces are convex in
    lambda, which justifies probing plus bisection for their boundary.
    """

    def __init__(self, d_xz, nu: float, orbit: TargetOrbit, box: HoveringBox,
                 basis: InPlaneControlBasis | None = None):
        if basis is None:
            basis = in_plane_control_basis(float(d_xz[0]), nu, orbit)
        self.basis = basis
        self.box = box
        self.e = orbit.e
        B_xz, _ = impulse_input_submatrices(nu, orbit)
        base4 = np.asarray(d_xz, dtype=float) + B_xz @ basis.dv0
        self.base = base4[1:4]
        self.direction = (B_xz @ basis.b_perp)[1:4]
        self._pencil = InTrackPencil(self.base, self.direction, self.e)

    def radial_interval(self) -> Interval | None:
        # Both z faces share the radial amplitude, so the binding constant
        # is the smaller face radius squared.
        w1, w2 = self.direction[0], self.direction[1]
        b1, b2 = self.base[0], self.base[1]
        A = w1 * w1 + w2 * w2
        B = 2.0 * (b1 * w1 + b2 * w2)
        C = b1 * b1 + b2 * b2
        z2 = min(self.box.z_min**2, self.box.z_max**2)
        return _quad_sublevel(A, B, C - z2)

    def x_face_values(self, lam, refine: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """(g_xmin, g_xmax) of the landing at each lambda."""
        x_lo, x_hi = self._pencil.extrema(lam, refine=refine)
        return self.box.x_min - x_lo, x_hi - self.box.x_max

    def x_violation(self, lam, refine: bool = True) -> np.ndarray:
        g_lo, g_hi = self.x_face_values(lam, refine=refine)
        return np.maximum(g_lo, g_hi)


def landing_interval_in_plane(
    d_xz, nu: float, orbit: TargetOrbit, box: HoveringBox,
    basis: InPlaneControlBasis | None = None,
) -> Interval | None:
    """Lambda interval whose periodicity-preserving landing is admissible.

    The z faces give exact quadratic roots; the in-track faces are refined
    by bisection seeded from 64 probes of the z interval.  Endpoints land
    on the admissible-set boundary to about 1e-9 relative in lambda.
    """
    geom = _InPlaneLanding(d_xz, nu, orbit, box, basis)
    z_int = geom.radial_interval()
    if z_int is None:
        return None
    probes = np.linspace(z_int.lo, z_int.hi, _PROBES)
    # Grid-accuracy scan to bracket the boundary.  The grid extrema bound
    # the root-polished ones from inside, so the grid violation is a lower
    # bound: grid-infeasible probes are certainly infeasible, while
    # grid-feasible ones are validated with the polished value.
    viol_grid = geom.x_violation(probes, refine=False)
    feasible = np.nonzero(viol_grid <= 0.0)[0]
    if feasible.size == 0:
        return None
    tol = _LAMBDA_TOL * max(abs(z_int.lo), abs(z_int.hi), 1e-3)

    def polished(lam: float) -> float:
        return float(geom.x_violation(np.array([lam]))[0])

    # Validate the outermost grid-feasible probes against the polished
    # violation, stepping inward past false positives along with their
    # measured values so the brackets below stay sign-correct.
    i0, i1 = int(feasible[0]), int(feasible[-1])
    left_out = (probes[i0 - 1], float(viol_grid[i0 - 1])) if i0 > 0 else None
    f_lo = polished(probes[i0])
    while f_lo > 0.0 and i0 < i1:
        left_out = (probes[i0], f_lo)
        i0 += 1
        f_lo = polished(probes[i0])
    if f_lo > 0.0:
        return None
    right_out = (probes[i1 + 1], float(viol_grid[i1 + 1])) if i1 + 1 < probes.size else None
    f_hi = polished(probes[i1]) if i1 > i0 else f_lo
    while f_hi > 0.0 and i1 > i0:
        right_out = (probes[i1], f_hi)
        i1 -= 1
        f_hi = polished(probes[i1]) if i1 > i0 else f_lo

    def boundary(a, fa, b, fb):
        # Illinois false position on the (continuous, convex) violation;
        # a is the infeasible side (fa > 0), b the feasible one (fb <= 0).
        side = 0
        for _ in range(80):
            if abs(b - a) <= tol:
                break
            m = (a * fb - b * fa) / (fb - fa)
            if not (min(a, b) < m < max(a, b)):
                m = 0.5 * (a + b)
            fm = polished(m)
            if fm > 0.0:
                a, fa = m, fm
                if side == -1:
                    fb *= 0.5
                side = -1
            else:
                b, fb = m, fm
                if side == 1:
                    fa *= 0.5
                side = 1
        return b

    left = boundary(*left_out, probes[i0], f_lo) if left_out is not None else z_int.lo
    right = boundary(*right_out, probes[i1], f_hi) if right_out is not None else z_int.hi
    return Interval(left, right)


def _golden_min_batch(eval_fn, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Minimum values of unimodal functions over [lo, hi], batched.

    ``eval_fn`` maps a vector of abscissae (one per instance) to values.
    Golden-section to the module lambda tolerance.
    """
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    width = float(np.max(hi - lo))
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = eval_fn(x1)
    f2 = eval_fn(x2)
    n_iter = max(
        0,
        int(math.ceil(math.log(max(width, _LAMBDA_TOL) / _LAMBDA_TOL) / math.log(1.0 / _GOLDEN))),
    )
    for _ in range(n_iter):
        right = f1 < f2  # minimum lies in [lo, x2]
        hi = np.where(right, x2, hi)
        lo = np.where(right, lo, x1)
        fresh = np.where(right, hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo))
        fp = eval_fn(fresh)
        x1_old, f1_old = x1, f1
        x1 = np.where(right, fresh, x2)
        f1 = np.where(right, fp, f2)
        x2 = np.where(right, x1_old, fresh)
        f2 = np.where(right, f1_old, fp)
        if float(np.max(hi - lo)) < _LAMBDA_TOL:
            break
    best = np.where(f1 < f2, x1, x2)
    return best, np.minimum(f1, f2)


def _x_face_minima(geom: _InPlaneLanding, union: IntervalUnion) -> tuple[float, float]:
    """Minima of the two in-track face envelopes over an interval union.

    Golden-section runs on the grid envelope (cheap, same minimizer to
    within the slope-root gap); the returned values are the polished
    envelope at the located minimizers, so they match the exact face
    functions to second order.
    """
    comps = union.components
    los = np.array([c.lo for c in comps])
    his = np.array([c.hi for c in comps])
    n = len(comps)
    lo2 = np.concatenate([los, los])
    hi2 = np.concatenate([his, his])

    def eval_both(lam):
        g_lo, g_hi = geom.x_face_values(lam, refine=False)
        return np.concatenate([g_lo[:n], g_hi[n:]])

    best, _ = _golden_min_batch(eval_both, lo2, hi2)
    g_lo, g_hi = geom.x_face_values(best, refine=True)
    vals = np.concatenate([g_lo[:n], g_hi[n:]])
    # Component endpoints are candidates too: the polished envelope can dip
    # below the grid envelope used during the search.
    g_lo_e, g_hi_e = geom.x_face_values(np.concatenate([los, his]), refine=True)
    return (
        float(min(vals[:n].min(), g_lo_e.min())),
        float(min(vals[n:].min(), g_hi_e.min())),
    )


def _report_one_sided(
    d: np.ndarray, nu: float, orbit: TargetOrbit, box: HoveringBox, limits: ThrusterLimits
):
    """Unions, lengths and depth indicators at a single anomaly."""
    e = orbit.e
    # Out-of-plane plane.
    sat_y = thruster_feasible_out_of_plane(limits)
    land_y = landing_interval_out_of_plane(d[4:6], nu, orbit, box)
    union_y = sat_y.intersect(IntervalUnion.from_interval(land_y))
    L_y = union_y.total_length()
    if L_y > 0.0:
        s, c = math.sin(nu), math.cos(nu)
        k2rho = orbit.k2 * radius_ratio(nu, e)
        b1, b2 = -s / k2rho, c / k2rho
        A = b1 * b1 + b2 * b2
        g_faces = []
        for w in (box.y_min, box.y_max):
            p = float(d[4]) - e * w
            q = float(d[5])
            g_faces.append(
                _quad_min_over(A, 2.0 * (p * b1 + q * b2), p * p + q * q - w * w, union_y)
            )
        G_y = min(max(g_faces), 0.0)
    else:
        G_y = 0.0

    # In-plane plane.
    basis = in_plane_control_basis(float(d[0]), nu, orbit)
    sat_xz = _feasible_in_plane_from_basis(basis, limits)
    geom = _InPlaneLanding(d[0:4], nu, orbit, box, basis)
    if sat_xz.is_empty:
        union_xz = IntervalUnion()
    else:
        land_xz = landing_interval_in_plane(d[0:4], nu, orbit, box, basis)
        union_xz = sat_xz.intersect(IntervalUnion.from_interval(land_xz))
    L_xz = union_xz.total_length()
    if L_xz > 0.0:
        w1, w2 = geom.direction[0], geom.direction[1]
        b1_, b2_ = geom.base[0], geom.base[1]
        A_r = w1 * w1 + w2 * w2
        B_r = 2.0 * (b1_ * w1 + b2_ * w2)
        C_r = b1_ * b1_ + b2_ * b2_
        g_zmin = _quad_min_over(A_r, B_r, C_r - box.z_min**2, union_xz)
        g_zmax = _quad_min_over(A_r, B_r, C_r - box.z_max**2, union_xz)
        g_xmin, g_xmax = _x_face_minima(geom, union_xz)
        G_xz = min(max(g_zmin, g_zmax, g_xmin, g_xmax), 0.0)
    else:
        G_xz = 0.0
    return union_xz, union_y, L_xz, L_y, G_xz, G_y


def reachability_report(
    params: RelativeOrbitParams,
    nu: float,
    orbit: TargetOrbit,
    box: HoveringBox,
    limits: ThrusterLimits,
    dnu_fd: float = math.radians(1.0),
) -> ReachabilityReport:
    """Full snapshot with forward-difference slopes of the G indicators.

    The slope is taken along the coasting flow: the state is propagated by
    the parameter transition over ``dnu_fd`` before the second evaluation,
    so a nonzero d0 drifts exactly as the model predicts.  At kinks of the
    max operator this is the one-sided forward value.
    """
    d = params.to_array()
    union_xz, union_y, L_xz, L_y, G_xz, G_y = _report_one_sided(d, nu, orbit, box, limits)
    d_next = parameter_transition(nu, nu + dnu_fd, orbit) @ d
    _, _, _, _, G_xz2, G_y2 = _report_one_sided(d_next, nu + dnu_fd, orbit, box, limits)
    return ReachabilityReport(
        lambda_sat_xz=union_xz,
        lambda_sat_y=union_y,
        L_xz=L_xz,
        L_y=L_y,
        G_xz=G_xz,
        G_y=G_y,
        G_nu_xz=(G_xz2 - G_xz) / dnu_fd,
        G_nu_y=(G_y2 - G_y) / dnu_fd,
    )


def plane_lengths(
    d: np.ndarray, nu: float, orbit: TargetOrbit, box: HoveringBox, limits: ThrusterLimits
) -> tuple[float, float]:
    """(L_xz, L_y) only; cheaper than a full report."""
    sat_y = thruster_feasible_out_of_plane(limits)
    land_y = landing_interval_out_of_plane(d[4:6], nu, orbit, box)
    L_y = sat_y.intersect(IntervalUnion.from_interval(land_y)).total_length()
    basis = in_plane_control_basis(float(d[0]), nu, orbit)
    sat_xz = _feasible_in_plane_from_basis(basis, limits)
    if sat_xz.is_empty:
        return 0.0, L_y
    land_xz = landing_interval_in_plane(d[0:4], nu, orbit, box, basis)
    L_xz = sat_xz.intersect(IntervalUnion.from_interval(land_xz)).total_length()
    return L_xz, L_y


def in_region_of_attraction(
    params: RelativeOrbitParams,
    nu: float,
    orbit: TargetOrbit,
    box: HoveringBox,
    limits: ThrusterLimits,
    n_samples: int = 100,
) -> bool:
    """Reachability of the admissible set over the next revolution.

    Discretized sufficient condition: both planes must show a positive
    landing-window length at some of the n_samples grid anomalies
    nu + 2 pi p / n_samples, p = 1..n_samples.  The in-plane subvector is
    propagated between samples, so a nonzero d0 drifts along the grid.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    d = params.to_array()
    got_xz = False
    got_y = False
    for p in range(1, n_samples + 1):
        nu_p = nu + 2.0 * math.pi * p / n_samples
        d_p = parameter_transition(nu, nu_p, orbit) @ d
        if not got_y:
            land_y = landing_interval_out_of_plane(d_p[4:6], nu_p, orbit, box)
            union_y = thruster_feasible_out_of_plane(limits).intersect(
                IntervalUnion.from_interval(land_y)
            )
            got_y = union_y.total_length() > 0.0
        if not got_xz:
            basis = in_plane_control_basis(float(d_p[0]), nu_p, orbit)
            sat_xz = _feasible_in_plane_from_basis(basis, limits)
            if not sat_xz.is_empty:
                land_xz = landing_interval_in_plane(d_p[0:4], nu_p, orbit, box, basis)
                got_xz = sat_xz.intersect(
                    IntervalUnion.from_interval(land_xz)
                ).total_length() > 0.0
        if got_xz and got_y:
            return True
    return False

"""Linearized relative motion in the relative-orbit-parameter state.

The chaser motion relative to an elliptic target is described in the LVLH
frame (x in-track, y opposite the orbital angular momentum, z toward the
Earth centre).  Positions are carried in meters, velocities in m/s; the
target orbit itself is sized in kilometers and converted where needed.

Two state representations are used:

* the Cartesian relative state ``[x, y, z, vx, vy, vz]`` as a function of
  time, and
* six motion parameters ``d0..d5`` (meters) that describe the relative
  orbit by its instantaneous shape and position: ``d0`` is the periodicity
  defect (zero on closed relative orbits), ``d1``/``d2`` set the in-plane
  amplitude and phase, ``d3`` the in-track offset, ``d4``/``d5`` the
  out-of-plane amplitude and phase.

All functions are pure; every type here is an immutable value.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import KeplerConvergenceError

EARTH_RADIUS_KM = 6378.137
TWO_PI = 2.0 * math.pi

# Velocity-only input map: an impulse changes the Cartesian velocity.
_B_INPUT = np.vstack([np.zeros((3, 3)), np.eye(3)])


@dataclass(frozen=True)
class TargetOrbit:
    """Keplerian elements of the (passive) target orbit.

    Args:
        a_km: Semi-major axis (km).
        e: Eccentricity in [0, 1).
        i_rad: Inclination (rad).
        raan_rad: Right ascension of the ascending node (rad).
        argp_rad: Argument of perigee (rad).
        mu_km3_s2: Gravitational parameter (km^3/s^2).
    """

    a_km: float
    e: float
    i_rad: float = 0.0
    raan_rad: float = 0.0
    argp_rad: float = 0.0
    mu_km3_s2: float = 398600.4

    def __post_init__(self):
        if not 0.0 <= self.e < 1.0:
            raise ValueError(f"eccentricity must be in [0, 1), got {self.e}")
        if self.mu_km3_s2 <= 0.0:
            raise ValueError("gravitational parameter must be positive")
        if self.a_km * (1.0 - self.e) <= EARTH_RADIUS_KM:
            raise ValueError(
                f"perigee radius {self.a_km * (1.0 - self.e):.1f} km is below the Earth surface"
            )

    @property
    def mean_motion(self) -> float:
        """Mean motion n = sqrt(mu/a^3) in rad/s."""
        return math.sqrt(self.mu_km3_s2 / self.a_km**3)

    @property
    def period_s(self) -> float:
        return TWO_PI / self.mean_motion

    @property
    def k2(self) -> float:
        """Anomaly-rate scale sqrt(mu / (a (1-e^2))^3), units 1/s.

        The target anomaly rate is k2 * rho(nu)^2.
        """
        return math.sqrt(self.mu_km3_s2 / (self.a_km * (1.0 - self.e**2)) ** 3)

    @classmethod
    def from_perigee_altitude(cls, h_p_km: float, e: float, **kwargs) -> "TargetOrbit":
        """Build an orbit with fixed perigee altitude; a grows with e."""
        a = (EARTH_RADIUS_KM + h_p_km) / (1.0 - e)
        return cls(a_km=a, e=e, **kwargs)


@dataclass(frozen=True)
class CartesianRelativeState:
    """Relative position (m) and velocity (m/s) in the target LVLH frame."""

    x: float
    y: float
    z: float
    vx: float
    vy: float
    vz: float

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.vx, self.vy, self.vz])

    @classmethod
    def from_array(cls, arr) -> "CartesianRelativeState":
        x, y, z, vx, vy, vz = (float(v) for v in arr)
        return cls(x, y, z, vx, vy, vz)


@dataclass(frozen=True)
class RelativeOrbitParams:
    """Six relative-orbit parameters d0..d5 (meters).

    The in-plane motion is carried by ``[d0, d1, d2, d3]`` and the
    out-of-plane motion by ``[d4, d5]``; the relative orbit is periodic
    exactly when ``d0 = 0``.
    """

    d0: float
    d1: float
    d2: float
    d3: float
    d4: float
    d5: float

    def to_array(self) -> np.ndarray:
        return np.array([self.d0, self.d1, self.d2, self.d3, self.d4, self.d5])

    @property
    def in_plane(self) -> np.ndarray:
        return np.array([self.d0, self.d1, self.d2, self.d3])

    @property
    def out_of_plane(self) -> np.ndarray:
        return np.array([self.d4, self.d5])

    @classmethod
    def from_array(cls, arr) -> "RelativeOrbitParams":
        d0, d1, d2, d3, d4, d5 = (float(v) for v in arr)
        return cls(d0, d1, d2, d3, d4, d5)

    def is_periodic(self, tol: float) -> bool:
        return abs(self.d0) <= tol


@dataclass(frozen=True)
class Impulse:
    """A velocity increment (m/s, LVLH axes) applied at a true anomaly."""

    dvx: float
    dvy: float
    dvz: float
    nu_applied: float

    def to_array(self) -> np.ndarray:
        return np.array([self.dvx, self.dvy, self.dvz])

    @property
    def norm2(self) -> float:
        return math.sqrt(self.dvx**2 + self.dvy**2 + self.dvz**2)

    @property
    def norm1(self) -> float:
        return abs(self.dvx) + abs(self.dvy) + abs(self.dvz)


@dataclass(frozen=True)
class ThrusterLimits:
    """Minimum impulse bit and saturation bound on ||dV||_2 (m/s)."""

    dv_min: float
    dv_max: float

    def __post_init__(self):
        if not 0.0 < self.dv_min < self.dv_max:
            raise ValueError(
                f"need 0 < dv_min < dv_max, got ({self.dv_min}, {self.dv_max})"
            )


def radius_ratio(nu: float, e: float) -> float:
    """rho = 1 + e cos(nu) = p / r; strictly positive for e < 1."""
    return 1.0 + e * math.cos(nu)


def time_to_anomaly_scaling(nu: float, orbit: TargetOrbit) -> np.ndarray:
    """6x6 map from the time-domain relative state to the anomaly domain.

    Positions are scaled by rho and velocities are converted from time to
    anomaly derivatives using the anomaly rate k2 * rho^2.
    """
    rho = radius_ratio(nu, orbit.e)
    rho_prime = -orbit.e * math.sin(nu)
    U = np.zeros((6, 6))
    U[:3, :3] = rho * np.eye(3)
    U[3:, :3] = rho_prime * np.eye(3)
    U[3:, 3:] = np.eye(3) / (orbit.k2 * rho)
    return U


def parameter_basis_matrix(nu: float, e: float) -> np.ndarray:
    """6x6 basis mapping the motion parameters to the anomaly-domain state.

    Nonsingular for all e in [0, 1): its determinant is -(1 - e^2).
    """
    s, c = math.sin(nu), math.cos(nu)
    rho = 1.0 + e * c
    return np.array(
        [
            [0.0, s * (1.0 + rho), -c * (1.0 + rho), 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, c, s],
            [2.0, c * rho, s * rho, 0.0, 0.0, 0.0],
            [3.0, 2.0 * c * rho - e, 2.0 * s * rho, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, -s, c],
            [-3.0 * e * s / rho, -s * (1.0 + 2.0 * e * c), 2.0 * e * c**2 - e + c, 0.0, 0.0, 0.0],
        ]
    )


def parameter_dynamics_matrix(nu: float, e: float) -> np.ndarray:
    """Anomaly-domain drift matrix: only d2 and d3 flow, driven by d0."""
    rho2 = radius_ratio(nu, e) ** 2
    A = np.zeros((6, 6))
    A[2, 0] = -3.0 * e / rho2
    A[3, 0] = 3.0 / rho2
    return A


def anomaly_to_time(nu: float, orbit: TargetOrbit) -> float:
    """Seconds elapsed since perigee passage for an unwrapped true anomaly.

    Monotone in nu; whole revolutions add one orbital period each.
    """
    e = orbit.e
    rev = math.floor(nu / TWO_PI)
    nu_w = nu - TWO_PI * rev
    # Eccentric anomaly in [0, 2*pi) from the wrapped true anomaly.
    E = 2.0 * math.atan2(
        math.sqrt(1.0 - e) * math.sin(nu_w / 2.0),
        math.sqrt(1.0 + e) * math.cos(nu_w / 2.0),
    )
    if E < 0.0:
        E += TWO_PI
    M = E - e * math.sin(E)
    return (M + TWO_PI * rev) / orbit.mean_motion


def time_to_anomaly(t: float, orbit: TargetOrbit, tol: float = 1e-12, max_iter: int = 50) -> float:
    """Unwrapped true anomaly at time t since perigee passage.

    Newton iteration on the eccentric anomaly, started at E = M for
    e < 0.8 and at E = pi otherwise.

    Raises:
        KeplerConvergenceError: no convergence within ``max_iter`` steps.
    """
    e = orbit.e
    m_total = orbit.mean_motion * t
    rev = math.floor(m_total / TWO_PI)
    M = m_total - TWO_PI * rev
    E = M if e < 0.8 else math.pi
    for _ in range(max_iter):
        f = E - e * math.sin(E) - M
        step = f / (1.0 - e * math.cos(E))
        E -= step
        if abs(step) < tol:
            break
    else:
        raise KeplerConvergenceError(
            f"Kepler iteration did not converge for M={M}, e={e}"
        )
    nu_w = 2.0 * math.atan2(
        math.sqrt(1.0 + e) * math.sin(E / 2.0),
        math.sqrt(1.0 - e) * math.cos(E / 2.0),
    )
    if nu_w < 0.0:
        nu_w += TWO_PI
    return nu_w + TWO_PI * rev


def drift_integral(nu0: float, nu: float, orbit: TargetOrbit) -> float:
    """Integral of 1/rho^2 between two anomalies (the secular drift phase).

    Evaluated in closed form through Kepler time:
    n * (t - t0) / (1 - e^2)^(3/2).  Monotone increasing in nu.
    """
    dt = anomaly_to_time(nu, orbit) - anomaly_to_time(nu0, orbit)
    return orbit.mean_motion * dt / (1.0 - orbit.e**2) ** 1.5


def parameter_transition(nu0: float, nu: float, orbit: TargetOrbit) -> np.ndarray:
    """Transition matrix of the motion parameters from nu0 to nu.

    Identity except for the secular coupling of d0 into d2 and d3.
    """
    J = drift_integral(nu0, nu, orbit)
    phi = np.eye(6)
    phi[2, 0] = -3.0 * orbit.e * J
    phi[3, 0] = 3.0 * J
    return phi


def impulse_input_matrix(nu: float, orbit: TargetOrbit) -> np.ndarray:
    """6x3 map from an LVLH velocity impulse to the parameter jump.

    Closed form of the composition (basis)^-1 (scaling) (velocity input);
    the common prefactor 1/(k2 (e^2-1) rho) is negative for e < 1.
    """
    e = orbit.e
    s, c = math.sin(nu), math.cos(nu)
    rho = 1.0 + e * c
    pref = 1.0 / (orbit.k2 * (e**2 - 1.0) * rho)
    return pref * np.array(
        [
            [rho**2, 0.0, -e * s * rho],
            [-2.0 * c - e * (1.0 + c**2), 0.0, s * rho],
            [-s * (2.0 + e * c), 0.0, 2.0 * e - c * rho],
            [e * s * (2.0 + e * c), 0.0, e * c * rho - 2.0],
            [0.0, -(e**2 - 1.0) * s, 0.0],
            [0.0, (e**2 - 1.0) * c, 0.0],
        ]
    )


def impulse_input_submatrices(nu: float, orbit: TargetOrbit) -> tuple[np.ndarray, np.ndarray]:
    """In-plane (4x2, columns x/z) and out-of-plane (2x1) input maps."""
    full = impulse_input_matrix(nu, orbit)
    return full[np.ix_([0, 1, 2, 3], [0, 2])], full[4:6, 1:2]


def cartesian_to_parameters(
    state: CartesianRelativeState, nu: float, orbit: TargetOrbit
) -> RelativeOrbitParams:
    """Invert the similarity transforms at a fixed anomaly.

    Solved by direct 6x6 LU; |det| of the basis equals 1 - e^2, which is
    asserted as a cheap conditioning check.
    """
    V = parameter_basis_matrix(nu, orbit.e)
    det = np.linalg.det(V)
    expected = 1.0 - orbit.e**2
    if abs(abs(det) - expected) > 1e-9 * expected:
        raise ArithmeticError(f"basis determinant {det} deviates from {-expected}")
    tilde = time_to_anomaly_scaling(nu, orbit) @ state.to_array()
    return RelativeOrbitParams.from_array(np.linalg.solve(V, tilde))


def parameters_to_cartesian(
    params: RelativeOrbitParams, nu: float, orbit: TargetOrbit
) -> CartesianRelativeState:
    """Map motion parameters back to the time-domain Cartesian state."""
    tilde = parameter_basis_matrix(nu, orbit.e) @ params.to_array()
    e = orbit.e
    rho = radius_ratio(nu, e)
    rho_prime = -e * math.sin(nu)
    k2 = orbit.k2
    pos = tilde[:3] / rho
    vel = k2 * rho * tilde[3:] - k2 * rho_prime * tilde[:3]
    # vel = k2 * (rho * tilde_vel + e sin(nu) * tilde_pos), inverse of the scaling map
    return CartesianRelativeState.from_array(np.concatenate([pos, vel]))


def apply_impulse(
    params: RelativeOrbitParams, nu: float, dv, orbit: TargetOrbit
) -> RelativeOrbitParams:
    """Instantaneous parameter jump produced by an LVLH velocity impulse.

    ``dv`` may be an Impulse or any 3-sequence in m/s.  Positions are
    unchanged; only the velocity content of the state jumps.
    """
    vec = dv.to_array() if isinstance(dv, Impulse) else np.asarray(dv, dtype=float)
    jumped = params.to_array() + impulse_input_matrix(nu, orbit) @ vec
    return RelativeOrbitParams.from_array(jumped)

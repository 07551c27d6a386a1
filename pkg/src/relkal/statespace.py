"""State, covariance, and noise value types plus CTRA/Cartesian conversions.

All quantities are SI (m, s, rad); units are documented per field instead of
being carried by a unit system.  Every type here is an immutable value object
and safe to share between threads.

Two global state parameterizations are used throughout:

* ``CtraState`` -- constant turn rate and acceleration coordinates
  (x, y, psi, psidot, v, a), the natural state of a wheeled vehicle.
* ``CartesianState6`` -- position, velocity, and acceleration per axis
  (x, y, vx, vy, ax, ay), the natural state of the white-noise-jerk model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Model",
    "DegenerateSpeed",
    "CtraState",
    "CartesianState6",
    "RelState",
    "GaussianBelief",
    "NoiseSpec",
    "EgoInput",
    "wrap_angle",
    "ctra_to_cartesian",
    "cartesian_to_ctra",
]

#: Speed below which a heading cannot be recovered from a velocity vector.
EPS_SPEED = 1e-6


class Model(enum.Enum):
    """Relative-dynamics model family.

    A -- body-fixed Cartesian coordinates, white-noise-jerk target dynamics;
         velocities and accelerations carry non-inertial (pseudo-force)
         corrections.
    B -- mixed coordinates: position relative to the ego vehicle, velocity and
         acceleration over ground rotated into the ego frame; white-noise-jerk
         target dynamics.
    C -- mixed coordinates on CTRA states: relative position and heading,
         target yaw rate / speed / acceleration over ground.
    """

    A = "A"
    B = "B"
    C = "C"


class DegenerateSpeed(ValueError):
    """Raised when a heading is requested from a (near-)zero velocity vector."""


def wrap_angle(psi: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    w = math.fmod(psi, 2.0 * math.pi)
    if w > math.pi:
        w -= 2.0 * math.pi
    elif w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True)
class CtraState:
    """Global vehicle state in turn-rate/acceleration coordinates.

    Attributes:
        x, y: position [m].
        psi: heading [rad]; reported wrapped to (-pi, pi] after propagation.
        psidot: yaw rate [rad/s].
        v: speed over ground [m/s].
        a: longitudinal acceleration [m/s^2].
    """

    x: float
    y: float
    psi: float
    psidot: float
    v: float
    a: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi, self.psidot, self.v, self.a])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "CtraState":
        x, y, psi, psidot, v, a = (float(c) for c in arr)
        return cls(x, y, psi, psidot, v, a)

    def wrapped(self) -> "CtraState":
        """Copy with the heading wrapped to (-pi, pi]."""
        return CtraState(self.x, self.y, wrap_angle(self.psi), self.psidot, self.v, self.a)


@dataclass(frozen=True)
class CartesianState6:
    """Global state as position/velocity/acceleration per axis (all SI)."""

    x: float
    y: float
    vx: float
    vy: float
    ax: float
    ay: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy, self.ax, self.ay])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "CartesianState6":
        x, y, vx, vy, ax, ay = (float(c) for c in arr)
        return cls(x, y, vx, vy, ax, ay)


@dataclass(frozen=True)
class RelState:
    """Model-tagged 6-vector of target coordinates relative to the ego vehicle.

    Component layout by model:

    ======  =====================================================
    model   data
    ======  =====================================================
    A       (x, y, xd, yd, xdd, ydd) body-fixed, with pseudo-force
            corrected derivatives
    B       (x, y, xd, yd, xdd, ydd); position relative, derivatives
            over ground rotated into the ego frame
    C       (x_rel, y_rel, psi_rel, psidot_g, v_g, a_g)
    ======  =====================================================

    The model tag is fixed for the lifetime of a track.
    """

    model: Model
    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=float).reshape(6).copy()
        object.__setattr__(self, "data", arr)

    def replace_data(self, data: np.ndarray) -> "RelState":
        return RelState(self.model, data)


@dataclass(frozen=True)
class GaussianBelief:
    """Mean state with covariance; used for both ego and target filters.

    ``mean`` is a ``RelState`` (target filter) or ``CtraState`` (ego filter);
    ``cov`` is the 6x6 covariance in SI units squared.  Construction does not
    validate (hot path); call :meth:`validate` at trust boundaries.
    """

    mean: "RelState | CtraState"
    cov: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float).reshape(6, 6).copy())

    def mean_array(self) -> np.ndarray:
        return self.mean.data.copy() if isinstance(self.mean, RelState) else self.mean.as_array()

    def validate(self, sym_rtol: float = 1e-9, psd_rtol: float = 1e-9) -> None:
        """Check symmetry (relative) and positive semi-definiteness.

        Raises ValueError on violation.  The PSD check tolerates eigenvalues
        down to ``-psd_rtol * trace``.
        """
        scale = max(float(np.abs(self.cov).max()), 1.0)
        if float(np.abs(self.cov - self.cov.T).max()) > sym_rtol * scale:
            raise ValueError("covariance is not symmetric")
        eigmin = float(np.linalg.eigvalsh(self.cov).min())
        if eigmin < -psd_rtol * max(float(np.trace(self.cov)), 1.0):
            raise ValueError(f"covariance is not PSD (min eigenvalue {eigmin:g})")


def _check_psd(name: str, m: np.ndarray, k: int) -> np.ndarray:
    m = np.asarray(m, dtype=float).reshape(k, k).copy()
    if float(np.abs(m - m.T).max()) > 1e-9 * max(float(np.abs(m).max()), 1.0):
        raise ValueError(f"{name} must be symmetric")
    if float(np.linalg.eigvalsh(m).min()) < -1e-9 * max(float(np.trace(m)), 1.0):
        raise ValueError(f"{name} must be positive semi-definite")
    return m


@dataclass(frozen=True)
class NoiseSpec:
    """Noise covariance blocks for generation, filtering, and measurement.

    Attributes:
        target_ctra: 2x2 cov of target (nu_psidd [rad/s^2], nu_adot [m/s^3]).
        target_jerk: 2x2 cov of target Cartesian jerk (nu_jx, nu_jy) [m/s^3].
        ego_ctra: 2x2 cov of ego (nu_psidd, nu_adot).
        meas_proprio: 3x3 cov of (psidot, v, a) readings.
        meas_extero: 2x2 cov of (x_rel, y_rel) readings.
    """

    target_ctra: np.ndarray
    target_jerk: np.ndarray
    ego_ctra: np.ndarray
    meas_proprio: np.ndarray
    meas_extero: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "target_ctra", _check_psd("target_ctra", self.target_ctra, 2))
        object.__setattr__(self, "target_jerk", _check_psd("target_jerk", self.target_jerk, 2))
        object.__setattr__(self, "ego_ctra", _check_psd("ego_ctra", self.ego_ctra, 2))
        object.__setattr__(self, "meas_proprio", _check_psd("meas_proprio", self.meas_proprio, 3))
        object.__setattr__(self, "meas_extero", _check_psd("meas_extero", self.meas_extero, 2))

    @classmethod
    def default(cls) -> "NoiseSpec":
        """Benchmark defaults.

        CTRA process noise diag(1 (rad/s^2)^2, 25 (m/s^3)^2) for both
        vehicles; the target jerk covariance diag(325, 325) (m/s^3)^2 is the
        Cartesian-jerk equivalent of that CTRA noise at highway speeds.
        Measurement noise: sigma 0.5 m per relative-position axis, and
        (0.01 rad/s, 0.1 m/s, 0.3 m/s^2) for the proprioceptive channels.
        """
        return cls(
            target_ctra=np.diag([1.0, 25.0]),
            target_jerk=np.diag([325.0, 325.0]),
            ego_ctra=np.diag([1.0, 25.0]),
            meas_proprio=np.diag([0.01**2, 0.1**2, 0.3**2]),
            meas_extero=np.diag([0.5**2, 0.5**2]),
        )


@dataclass(frozen=True)
class EgoInput:
    """Observable ego quantities fed to the target filter.

    Only speed, longitudinal acceleration, and yaw rate (plus their 3x3
    covariance, ordered (v0, a0, psidot0)) enter the relative dynamics; the
    unobservable ego pose never leaves the ego filter.
    """

    v0: float
    a0: float
    psidot0: float
    cov: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self) -> None:
        object.__setattr__(self, "cov", _check_psd("cov", self.cov, 3))


def ctra_to_cartesian(s: CtraState) -> CartesianState6:
    """Convert a CTRA state to Cartesian position/velocity/acceleration.

    The velocity is v*(cos psi, sin psi); the acceleration is its time
    derivative, a*(cos psi, sin psi) + v*psidot*(-sin psi, cos psi).
    """
    c, si = math.cos(s.psi), math.sin(s.psi)
    return CartesianState6(
        s.x,
        s.y,
        s.v * c,
        s.v * si,
        s.a * c - s.v * s.psidot * si,
        s.a * si + s.v * s.psidot * c,
    )


def cartesian_to_ctra(s: CartesianState6, eps_v: float = EPS_SPEED) -> CtraState:
    """Invert :func:`ctra_to_cartesian`.

    Heading is the velocity direction, longitudinal acceleration its
    along-track projection, and the yaw rate the curvature term
    (vx*ay - vy*ax)/v^2.

    Raises:
        DegenerateSpeed: if the speed is at or below ``eps_v`` (the heading is
            unobservable from the velocity vector).
    """
    speed = math.hypot(s.vx, s.vy)
    if speed <= eps_v:
        raise DegenerateSpeed(f"speed {speed:g} m/s <= eps_v {eps_v:g} m/s")
    psi = math.atan2(s.vy, s.vx)
    a = (s.vx * s.ax + s.vy * s.ay) / speed
    psidot = (s.vx * s.ay - s.vy * s.ax) / speed**2
    return CtraState(s.x, s.y, psi, psidot, speed, a)

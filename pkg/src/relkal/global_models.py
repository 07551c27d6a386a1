"""Global (inertial-frame) vehicle dynamics: CTRA and white-noise jerk.

Both models are solved with the discrete-time-counterpart convention: the
continuous driving noise is replaced by a sample that stays constant over one
step.  The CTRA closed form is exact in every component except position,
where the Fresnel-type integrals produced by the quadratic angle term are
replaced by their first-order Taylor expansion in the yaw-acceleration noise;
the residual error is O(nu_psidd^2 * t^5) and is bounded by the integration
oracle tests.

The CTRA state is (x, y, psi, psidot, v, a); the white-noise-jerk state is
(x, y, vx, vy, ax, ay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._moments import trig_moments
from .statespace import CartesianState6, CtraState, wrap_angle

__all__ = [
    "CtraNoiseSample",
    "JerkNoiseSample",
    "ctra_derivative",
    "ctra_propagate",
    "ctra_displacement",
    "ctra_discrete_jacobians",
    "wnj_propagate",
    "wnj_transition",
]


@dataclass(frozen=True)
class CtraNoiseSample:
    """One step's constant CTRA noise: yaw acceleration and longitudinal jerk."""

    nu_psidd: float = 0.0  # rad/s^2
    nu_adot: float = 0.0  # m/s^3


@dataclass(frozen=True)
class JerkNoiseSample:
    """One step's constant Cartesian jerk noise."""

    nu_jx: float = 0.0  # m/s^3
    nu_jy: float = 0.0  # m/s^3


def ctra_derivative(s: CtraState, n: CtraNoiseSample | None = None) -> np.ndarray:
    """Continuous CTRA vector field (v cos psi, v sin psi, psidot, nu_psidd, a, nu_adot)."""
    nu_p = n.nu_psidd if n is not None else 0.0
    nu_a = n.nu_adot if n is not None else 0.0
    return np.array(
        [s.v * math.cos(s.psi), s.v * math.sin(s.psi), s.psidot, nu_p, s.a, nu_a]
    )


def ctra_displacement(
    psi0: float,
    psidot: float,
    v: float,
    a: float,
    t: float,
    nu_psidd: float = 0.0,
    nu_adot: float = 0.0,
) -> tuple[float, float]:
    """Position displacement of CTRA motion over [0, t].

    Integrates v(s)*cos(psi(s)) and v(s)*sin(psi(s)) with the integrand
    expanded to first order in nu_psidd (the speed polynomial is kept exact).
    """
    C, S = trig_moments(psi0, psidot, t)
    dx = v * C[0] + a * C[1] + 0.5 * nu_adot * C[2]
    dy = v * S[0] + a * S[1] + 0.5 * nu_adot * S[2]
    if nu_psidd != 0.0:
        dx -= 0.5 * nu_psidd * (v * S[2] + a * S[3] + 0.5 * nu_adot * S[4])
        dy += 0.5 * nu_psidd * (v * C[2] + a * C[3] + 0.5 * nu_adot * C[4])
    return dx, dy


def ctra_propagate(s: CtraState, dt: float, n: CtraNoiseSample | None = None) -> CtraState:
    """Closed-form CTRA step holding the noise sample constant over [0, dt].

    The heading is wrapped to (-pi, pi] on output; the near-straight-driving
    singularity of the turning solution is removed inside the moment
    integrals, so the result is smooth in psidot through zero.
    """
    nu_p = n.nu_psidd if n is not None else 0.0
    nu_a = n.nu_adot if n is not None else 0.0
    dx, dy = ctra_displacement(s.psi, s.psidot, s.v, s.a, dt, nu_p, nu_a)
    return CtraState(
        s.x + dx,
        s.y + dy,
        wrap_angle(s.psi + s.psidot * dt + 0.5 * nu_p * dt * dt),
        s.psidot + nu_p * dt,
        s.v + s.a * dt + 0.5 * nu_a * dt * dt,
        s.a + nu_a * dt,
    )


def ctra_discrete_jacobians(s: CtraState, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic Jacobians of :func:`ctra_propagate` at zero noise.

    Returns:
        F: 6x6 derivative w.r.t. the state (x, y, psi, psidot, v, a).
        G: 6x2 derivative w.r.t. the noise sample (nu_psidd, nu_adot).
    """
    C, S = trig_moments(s.psi, s.psidot, dt)
    v, a = s.v, s.a
    F = np.eye(6)
    F[0, 2] = -(v * S[0] + a * S[1])
    F[0, 3] = -(v * S[1] + a * S[2])
    F[0, 4] = C[0]
    F[0, 5] = C[1]
    F[1, 2] = v * C[0] + a * C[1]
    F[1, 3] = v * C[1] + a * C[2]
    F[1, 4] = S[0]
    F[1, 5] = S[1]
    F[2, 3] = dt
    F[4, 5] = dt

    G = np.zeros((6, 2))
    G[0, 0] = -0.5 * (v * S[2] + a * S[3])
    G[1, 0] = 0.5 * (v * C[2] + a * C[3])
    G[2, 0] = 0.5 * dt * dt
    G[3, 0] = dt
    G[0, 1] = 0.5 * C[2]
    G[1, 1] = 0.5 * S[2]
    G[4, 1] = 0.5 * dt * dt
    G[5, 1] = dt
    return F, G


def wnj_propagate(s: CartesianState6, dt: float, n: JerkNoiseSample | None = None) -> CartesianState6:
    """Exact white-noise-jerk step (per-axis polynomial integral)."""
    jx = n.nu_jx if n is not None else 0.0
    jy = n.nu_jy if n is not None else 0.0
    t2 = 0.5 * dt * dt
    t3 = dt * dt * dt / 6.0
    return CartesianState6(
        s.x + s.vx * dt + s.ax * t2 + jx * t3,
        s.y + s.vy * dt + s.ay * t2 + jy * t3,
        s.vx + s.ax * dt + jx * t2,
        s.vy + s.ay * dt + jy * t2,
        s.ax + jx * dt,
        s.ay + jy * dt,
    )


def wnj_transition(dt: float) -> np.ndarray:
    """White-noise-jerk transition matrix on the (x, y, vx, vy, ax, ay) layout."""
    F = np.eye(6)
    F[0, 2] = F[1, 3] = F[2, 4] = F[3, 5] = dt
    F[0, 4] = F[1, 5] = 0.5 * dt * dt
    return F

"""Coordinate machinery: rotations, non-inertial corrections, and model maps.

The ego-fixed frame rotates with the ego vehicle, so a state carrying
body-fixed derivatives picks up pseudo-force corrections.  They are encoded
in the block matrix

    M = | r        0      0 |
        | rdot     r      0 |
        | rddot  2 rdot   r |

whose off-diagonal blocks produce the velocity-transport, centrifugal, and
Coriolis terms.  Dropping the rdot block would make a steadily-followed
vehicle (same circle, same speed) appear to move in the ego frame; a
regression test pins that behaviour.

Model B keeps derivatives over ground (M without the non-inertial blocks,
i.e. blockdiag(r, r, r)) and subtracts only the ego position; model C works
directly on turn-rate coordinates with blockdiag(r, I, I).  The ego reference
point is taken as the origin of the relative frame, and M is always evaluated
with zero angular acceleration (the ego state carries no psidd component; the
noise contributing it has zero mean).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .statespace import (
    CartesianState6,
    CtraState,
    Model,
    RelState,
    cartesian_to_ctra,
    ctra_to_cartesian,
    wrap_angle,
)

__all__ = [
    "TransformKind",
    "Transform6",
    "rotation",
    "rotation_rates",
    "mixing_matrix",
    "projector",
    "to_relative",
    "from_relative",
]


class TransformKind(enum.Enum):
    M_NONINERTIAL = "M_noninertial"
    R_MIXED = "R_mixed"
    RTILDE_MIXED = "Rtilde_mixed"


@dataclass(frozen=True)
class Transform6:
    """A 6x6 state transform tagged with its construction."""

    matrix: np.ndarray
    kind: TransformKind

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float).reshape(6, 6))


def rotation(psi: float) -> np.ndarray:
    """2D rotation into a frame with heading psi: rows (cos, sin), (-sin, cos)."""
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, s], [-s, c]])


def rotation_rates(psi: float, psidot: float, psiddot: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rotation matrix and its first two time derivatives along psi(t).

    rdot = psidot * dr/dpsi; rddot = psiddot * dr/dpsi + psidot^2 * d2r/dpsi2.
    """
    r = rotation(psi)
    dr = np.array([[r[1, 0], r[1, 1]], [-r[0, 0], -r[0, 1]]])  # dr/dpsi
    rdot = psidot * dr
    rddot = psiddot * dr - psidot**2 * r  # d2r/dpsi2 = -r
    return r, rdot, rddot


def mixing_matrix(model: Model, ego: CtraState) -> Transform6:
    """Transform from global differences to the model's relative coordinates.

    Model A: full non-inertial M built from rotation_rates(psi, psidot, 0).
    Model B: blockdiag(r, r, r) -- derivatives stay over ground.
    Model C: blockdiag(r, I, I) -- only the position pair is rotated.
    """
    m = np.zeros((6, 6))
    r = rotation(ego.psi)
    m[0:2, 0:2] = r
    if model is Model.A:
        _, rdot, rddot = rotation_rates(ego.psi, ego.psidot, 0.0)
        m[2:4, 0:2] = rdot
        m[2:4, 2:4] = r
        m[4:6, 0:2] = rddot
        m[4:6, 2:4] = 2.0 * rdot
        m[4:6, 4:6] = r
        return Transform6(m, TransformKind.M_NONINERTIAL)
    if model is Model.B:
        m[2:4, 2:4] = r
        m[4:6, 4:6] = r
        return Transform6(m, TransformKind.R_MIXED)
    m[2:4, 2:4] = np.eye(2)
    m[4:6, 4:6] = np.eye(2)
    return Transform6(m, TransformKind.RTILDE_MIXED)


def projector(model: Model) -> np.ndarray:
    """Diagonal projector selecting the ego components subtracted by the model."""
    if model is Model.A:
        return np.eye(6)
    if model is Model.B:
        return np.diag([1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    return np.diag([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])


def to_relative(model: Model, target: CtraState, ego: CtraState) -> RelState:
    """Map global target and ego states into the model's relative coordinates."""
    m = mixing_matrix(model, ego).matrix
    if model is Model.C:
        diff = target.as_array() - projector(model) @ ego.as_array()
        data = m @ diff
        data[2] = wrap_angle(data[2])
        return RelState(Model.C, data)
    t6 = ctra_to_cartesian(target).as_array()
    e6 = ctra_to_cartesian(ego).as_array()
    return RelState(model, m @ (t6 - projector(model) @ e6))


def from_relative(model: Model, rel: RelState, ego: CtraState) -> CtraState:
    """Invert :func:`to_relative`, recovering the global target state.

    For models A and B the reconstruction goes through Cartesian coordinates;
    a target with near-zero reconstructed speed raises
    :class:`~relkal.statespace.DegenerateSpeed` rather than guessing a
    heading.
    """
    if rel.model is not model:
        raise ValueError(f"relative state is tagged {rel.model}, expected {model}")
    m = mixing_matrix(model, ego).matrix
    if model is Model.C:
        arr = projector(model) @ ego.as_array() + np.linalg.solve(m, rel.data)
        return CtraState(arr[0], arr[1], wrap_angle(arr[2]), arr[3], arr[4], arr[5])
    e6 = ctra_to_cartesian(ego).as_array()
    t6 = projector(model) @ e6 + np.linalg.solve(m, rel.data)
    return cartesian_to_ctra(CartesianState6.from_array(t6))

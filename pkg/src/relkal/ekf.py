"""Extended Kalman filter cycle for the ego and target observers.

The same predict/update machinery runs twice per frame: an ego filter on the
turn-rate state with proprioceptive (psidot, v, a) updates, and one target
filter per relative model with exteroceptive relative-position updates.  The
ego filter's pose components are dead-reckoned and never exported; only the
observable triple (v, a, psidot) and its covariance flow to the target
filters, where they enter the prediction as an input with covariance
B P_ego B^T.

Updates use the Joseph-form covariance for numerical robustness.  All
operations are pure (belief in, belief out); distinct tracks can be processed
in parallel without coordination.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .global_models import ctra_discrete_jacobians, ctra_propagate
from .relmodels import discrete_jacobians, noise_covariances, propagate_relative
from .statespace import CtraState, EgoInput, GaussianBelief, Model, RelState, wrap_angle

__all__ = [
    "MeasurementKind",
    "MeasurementModel",
    "SingularInnovation",
    "initialize_track",
    "predict",
    "update",
    "initialize_ego",
    "ego_predict",
    "ego_input_from",
]

#: Condition number of the innovation covariance above which updates refuse.
COND_LIMIT = 1e12

#: Initial covariance of the unmeasured state entries, per model layout:
#: (vx, vy, ax, ay) for A/B, (psi_rel, psidot_g, v_g, a_g) for C.
DEFAULT_UNMEASURED_COV = {
    Model.A: np.diag([100.0, 100.0, 25.0, 25.0]),
    Model.B: np.diag([100.0, 100.0, 25.0, 25.0]),
    Model.C: np.diag([1.0, 1.0, 400.0, 25.0]),
}


class SingularInnovation(RuntimeError):
    """Innovation covariance numerically singular; no update possible."""


class MeasurementKind(enum.Enum):
    PROPRIO_PSIDOT_V_A = "proprio_psidot_v_a"
    EXTERO_POSITION_XY = "extero_position_xy"
    # Optional relative-velocity channel (model B only: its velocity
    # components are linear in the state); off by default everywhere.
    EXTERO_POSVEL_XY = "extero_posvel_xy"


@dataclass(frozen=True)
class MeasurementModel:
    """Linear(ized) measurement: z = H x + noise with covariance W."""

    H: np.ndarray
    W: np.ndarray
    kind: MeasurementKind

    def __post_init__(self) -> None:
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        k = H.shape[0]
        if H.shape != (k, 6) or W.shape != (k, k):
            raise ValueError(f"inconsistent measurement shapes {H.shape}, {W.shape}")
        if float(np.abs(W - W.T).max()) > 1e-9 * max(float(np.abs(W).max()), 1.0):
            raise ValueError("W must be symmetric")
        if float(np.linalg.eigvalsh(W).min()) < -1e-12 * max(float(np.trace(W)), 1.0):
            raise ValueError("W must be positive semi-definite")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "W", W)

    @classmethod
    def proprio(cls, cov: np.ndarray) -> "MeasurementModel":
        """(psidot, v, a) readings on the turn-rate state layout."""
        H = np.zeros((3, 6))
        H[0, 3] = H[1, 4] = H[2, 5] = 1.0
        return cls(H, cov, MeasurementKind.PROPRIO_PSIDOT_V_A)

    @classmethod
    def extero_position(cls, cov: np.ndarray) -> "MeasurementModel":
        """(x_rel, y_rel) readings; valid for every relative model."""
        H = np.zeros((2, 6))
        H[0, 0] = H[1, 1] = 1.0
        return cls(H, cov, MeasurementKind.EXTERO_POSITION_XY)

    @classmethod
    def extero_posvel(cls, cov: np.ndarray) -> "MeasurementModel":
        """(x_rel, y_rel, vx, vy) readings; model B only."""
        H = np.zeros((4, 6))
        H[0, 0] = H[1, 1] = H[2, 2] = H[3, 3] = 1.0
        return cls(H, cov, MeasurementKind.EXTERO_POSVEL_XY)


def initialize_track(
    z: np.ndarray,
    meas: MeasurementModel,
    model: Model,
    unmeasured_cov: np.ndarray | None = None,
) -> GaussianBelief:
    """Start a track from the first relative-position measurement.

    Unmeasured entries are set to zero; the covariance is
    blockdiag(W, unmeasured_cov).
    """
    if meas.kind is not MeasurementKind.EXTERO_POSITION_XY:
        raise ValueError("track initialization requires a position measurement")
    z = np.asarray(z, dtype=float).reshape(2)
    mean = RelState(model, np.array([z[0], z[1], 0.0, 0.0, 0.0, 0.0]))
    d = DEFAULT_UNMEASURED_COV[model] if unmeasured_cov is None else np.asarray(unmeasured_cov)
    cov = np.zeros((6, 6))
    cov[0:2, 0:2] = meas.W
    cov[2:6, 2:6] = d
    return GaussianBelief(mean, cov)


def predict(
    b: GaussianBelief,
    model: Model,
    ego_in: EgoInput,
    V_rel: np.ndarray,
    dt: float,
    psi0: float = 0.0,
) -> GaussianBelief:
    """Target-filter time update.

    Mean follows the zero-noise closed form; the covariance picks up the
    linearized state propagation plus the ego-input and process noise terms
    B P_ego B^T and G V_rel G^T.
    """
    assert isinstance(b.mean, RelState)
    jac = discrete_jacobians(model, b.mean, ego_in, dt, psi0)
    mean = propagate_relative(model, b.mean, ego_in, dt, None, psi0)
    q_in, q_proc = noise_covariances(jac, ego_in.cov, V_rel)
    cov = jac.A @ b.cov @ jac.A.T + q_in + q_proc
    return GaussianBelief(mean, 0.5 * (cov + cov.T))


def _corrected_mean(mean, delta: np.ndarray):
    if isinstance(mean, RelState):
        data = mean.data + delta
        if mean.model is Model.C:
            data[2] = wrap_angle(data[2])
        return RelState(mean.model, data)
    arr = mean.as_array() + delta
    return CtraState(arr[0], arr[1], wrap_angle(arr[2]), arr[3], arr[4], arr[5])


def update(b: GaussianBelief, z: np.ndarray, m: MeasurementModel) -> GaussianBelief:
    """Measurement update with Joseph-form covariance.

    Raises:
        SingularInnovation: if the innovation covariance is numerically
            singular (condition number above ``COND_LIMIT``).
    """
    H, W = m.H, m.W
    z = np.asarray(z, dtype=float).reshape(H.shape[0])
    x = b.mean_array()
    S = H @ b.cov @ H.T + W
    eig = np.linalg.eigvalsh(0.5 * (S + S.T))
    if not np.isfinite(eig).all() or eig[0] <= eig[-1] / COND_LIMIT:
        raise SingularInnovation(f"innovation covariance eigenvalues {eig}")
    K = np.linalg.solve(S, H @ b.cov).T
    delta = K @ (z - H @ x)
    ikh = np.eye(6) - K @ H
    cov = ikh @ b.cov @ ikh.T + K @ W @ K.T
    return GaussianBelief(_corrected_mean(b.mean, delta), 0.5 * (cov + cov.T))


def initialize_ego(z_proprio: np.ndarray, meas: MeasurementModel) -> GaussianBelief:
    """Start the ego filter at the frame origin from the first (psidot, v, a) frame.

    The pose block starts at zero with zero covariance: the ego filter's pose
    is a dead-reckoning convention, never exported.
    """
    if meas.kind is not MeasurementKind.PROPRIO_PSIDOT_V_A:
        raise ValueError("ego initialization requires a proprioceptive measurement")
    z = np.asarray(z_proprio, dtype=float).reshape(3)
    mean = CtraState(0.0, 0.0, 0.0, z[0], z[1], z[2])
    cov = np.zeros((6, 6))
    cov[3:6, 3:6] = meas.W
    return GaussianBelief(mean, cov)


def ego_predict(b: GaussianBelief, process_cov: np.ndarray, dt: float) -> GaussianBelief:
    """Ego-filter time update under the turn-rate model.

    ``process_cov`` is the 2x2 covariance of (nu_psidd, nu_adot).
    """
    assert isinstance(b.mean, CtraState)
    F, G = ctra_discrete_jacobians(b.mean, dt)
    mean = ctra_propagate(b.mean, dt)
    cov = F @ b.cov @ F.T + G @ np.asarray(process_cov, dtype=float) @ G.T
    return GaussianBelief(mean, 0.5 * (cov + cov.T))


def ego_input_from(b: GaussianBelief) -> EgoInput:
    """Export the observable ego quantities (v, a, psidot) with covariance."""
    s = b.mean
    assert isinstance(s, CtraState)
    idx = np.array([4, 5, 3])  # (v, a, psidot) in the state layout
    return EgoInput(s.v, s.a, s.psidot, b.cov[np.ix_(idx, idx)])

"""Relative target dynamics: vector fields, closed-form steps, and Jacobians.

Three models share one contract.  Each is the dynamics of the model-tagged
relative state induced by global target dynamics (white-noise jerk for A and
B, turn-rate/acceleration for C), global ego turn-rate/acceleration dynamics,
and the model's coordinate map.  Only the observable ego quantities
(v0, a0, psidot0) enter; the ego pose drops out of the algebra, except that
the ego global heading multiplies the Cartesian target noise of models A and
B.  That heading is therefore kept as an explicit ``psi0`` parameter
(default 0); with isotropic target jerk noise the propagated covariance is
independent of it, which is asserted by test rather than assumed.

The closed forms below were reduced by hand to combinations of the
trigonometric moment integrals C_k, S_k (see ``_moments``) and are committed
as explicit expressions; they are deliberately *not* implemented by composing
the coordinate maps in :mod:`relkal.frames` with the global propagators, so
that the transform route stays available as an independent oracle.  Within a
step, the driving noise is constant and the integrands of Fresnel-type
position integrals are expanded to first order in the yaw-acceleration
samples; everything else is exact.

Building blocks ("pos/vel/acc" refer to the (0:2, 2:4, 4:6) component pairs):

* ``K(w)``: unit block-triangular factor of the non-inertial map,
  rows ((I,0,0), (wJ,I,0), (-w^2 I, 2wJ, I)) with K(w)^-1 = K(-w).
* ``R6(theta)``: blockdiag(r, r, r) rotation.
* ``N``: the jerk-chain shift (pos<-vel, vel<-acc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._moments import trig_moments
from .global_models import (
    CtraNoiseSample,
    JerkNoiseSample,
    ctra_displacement,
    wnj_transition,
)
from .statespace import EgoInput, Model, RelState, wrap_angle

__all__ = [
    "RelNoiseSample",
    "DiscreteJacobians",
    "relative_derivative",
    "propagate_relative",
    "discrete_jacobians",
    "noise_covariances",
]

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])
_J6 = np.kron(np.eye(3), _J)
_N = np.zeros((6, 6))
_N[0, 2] = _N[1, 3] = _N[2, 4] = _N[3, 5] = 1.0


@dataclass(frozen=True)
class RelNoiseSample:
    """Stacked per-step noise (nu_target, nu_ego) for the relative dynamics.

    ``target`` is a :class:`JerkNoiseSample` for models A/B and a
    :class:`CtraNoiseSample` for model C; ``ego`` is always a
    :class:`CtraNoiseSample`.
    """

    target: "JerkNoiseSample | CtraNoiseSample"
    ego: CtraNoiseSample

    @classmethod
    def zero(cls, model: Model) -> "RelNoiseSample":
        target = CtraNoiseSample() if model is Model.C else JerkNoiseSample()
        return cls(target, CtraNoiseSample())

    def target_vec(self) -> np.ndarray:
        t = self.target
        if isinstance(t, JerkNoiseSample):
            return np.array([t.nu_jx, t.nu_jy])
        return np.array([t.nu_psidd, t.nu_adot])

    def ego_vec(self) -> np.ndarray:
        return np.array([self.ego.nu_psidd, self.ego.nu_adot])

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.target_vec(), self.ego_vec()])


@dataclass(frozen=True)
class DiscreteJacobians:
    """Derivatives of one discrete step, evaluated at zero noise.

    A: 6x6 w.r.t. the relative state; B: 6x3 w.r.t. the observable ego input
    (v0, a0, psidot0); G: 6x4 w.r.t. the stacked noise (nu_target, nu_ego).
    """

    A: np.ndarray
    B: np.ndarray
    G: np.ndarray


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def _r6(theta: float) -> np.ndarray:
    return np.kron(np.eye(3), _rot(theta))


def _kmat(om: float) -> np.ndarray:
    k = np.eye(6)
    k[2:4, 0:2] = om * _J
    k[4:6, 0:2] = -(om * om) * np.eye(2)
    k[4:6, 2:4] = 2.0 * om * _J
    return k


def _dkmat(om: float) -> np.ndarray:
    """d/dom of K(om)."""
    d = np.zeros((6, 6))
    d[2:4, 0:2] = _J
    d[4:6, 0:2] = -2.0 * om * np.eye(2)
    d[4:6, 2:4] = 2.0 * _J
    return d


def _dkmat_neg(om: float) -> np.ndarray:
    """d/dom of K(-om)."""
    d = np.zeros((6, 6))
    d[2:4, 0:2] = -_J
    d[4:6, 0:2] = -2.0 * om * np.eye(2)
    d[4:6, 2:4] = -2.0 * _J
    return d


def _check_model(rel: RelState, model: Model) -> None:
    if rel.model is not model:
        raise ValueError(f"relative state is tagged {rel.model}, expected {model}")


# ---------------------------------------------------------------------------
# Continuous vector fields (right-hand sides with the ego step trajectory
# substituted; `t` is the time since the step started).
# ---------------------------------------------------------------------------


def relative_derivative(
    model: Model,
    rel: RelState,
    ego_in: EgoInput,
    ego_psi0: float,
    t: float,
    n: RelNoiseSample | None = None,
) -> np.ndarray:
    """Time derivative of the relative state at in-step time ``t``.

    The ego trajectory over the step (heading, yaw rate, speed, acceleration
    evolving under the constant ego noise sample) is substituted analytically;
    no ego position ever appears.  At t = 0 with zero noise the ego terms
    reduce to (v0, a0, psidot0).
    """
    _check_model(rel, model)
    if n is None:
        n = RelNoiseSample.zero(model)
    nu_pe, nu_ae = n.ego.nu_psidd, n.ego.nu_adot
    v0, a0, om0 = ego_in.v0, ego_in.a0, ego_in.psidot0
    om_t = om0 + nu_pe * t
    psi_e = ego_psi0 + om0 * t + 0.5 * nu_pe * t * t
    v_t = v0 + a0 * t + 0.5 * nu_ae * t * t
    a_t = a0 + nu_ae * t
    x = rel.data

    if model is Model.C:
        nu_pt, nu_at = n.target.nu_psidd, n.target.nu_adot
        psirel = x[2]
        return np.array(
            [
                om_t * x[1] + x[4] * math.cos(psirel) - v_t,
                -om_t * x[0] + x[4] * math.sin(psirel),
                x[3] - om_t,
                nu_pt,
                x[5],
                nu_at,
            ]
        )

    nt = np.array([n.target.nu_jx, n.target.nu_jy])
    r_e = _rot(psi_e)
    if model is Model.B:
        out = (om_t * _J6 + _N) @ x
        out[0] -= v_t
        out[4:6] += r_e @ nt
        return out

    # Model A: d(M)/dt M^-1 + M N M^-1 acting on the state, plus the rotated
    # difference of target jerk noise and ego jerk.
    cp, sp = math.cos(psi_e), math.sin(psi_e)
    je = np.array(
        [
            nu_ae * cp - 2.0 * a_t * om_t * sp - v_t * nu_pe * sp - v_t * om_t**2 * cp,
            nu_ae * sp + 2.0 * a_t * om_t * cp + v_t * nu_pe * cp - v_t * om_t**2 * sp,
        ]
    )
    K = _kmat(om_t)
    L = (nu_pe * _dkmat(om_t) + K @ (om_t * _J6 + _N)) @ _kmat(-om_t)
    out = L @ x
    out[4:6] += r_e @ (nt - je)
    return out


# ---------------------------------------------------------------------------
# Closed-form discrete steps.
# ---------------------------------------------------------------------------


def _ego_scalars(v0, a0, om, t, nu_pe, nu_ae):
    """Ego step kinematics in the step-start ego frame (heading 0)."""
    dpsi = om * t + 0.5 * nu_pe * t * t
    om_t = om + nu_pe * t
    v_t = v0 + a0 * t + 0.5 * nu_ae * t * t
    a_t = a0 + nu_ae * t
    de = np.array(ctra_displacement(0.0, om, v0, a0, t, nu_pe, nu_ae))
    return dpsi, om_t, v_t, a_t, de


def _propagate_ab(model, x0, v0, a0, om, t, nt, nu_pe, nu_ae, psi0):
    dpsi, om_t, v_t, a_t, de = _ego_scalars(v0, a0, om, t, nu_pe, nu_ae)
    rho = _rot(psi0) @ nt  # the only place the global heading enters
    rd = _rot(dpsi)
    t2, t3 = 0.5 * t * t, t * t * t / 6.0

    if model is Model.B:
        pos = rd @ (x0[0:2] + x0[2:4] * t + x0[4:6] * t2 + rho * t3 - de)
        vel = rd @ (x0[2:4] + x0[4:6] * t + rho * t2)
        acc = rd @ (x0[4:6] + rho * t)
        return np.concatenate([pos, vel, acc])

    cd, sd = math.cos(dpsi), math.sin(dpsi)
    vevec = np.array([v_t * cd, v_t * sd])
    aevec = np.array([a_t * cd - v_t * om_t * sd, a_t * sd + v_t * om_t * cd])
    e2 = np.array([a0, v0 * om])
    z0 = _kmat(-om) @ x0
    wpos = z0[0:2] + (z0[2:4] + [v0, 0.0]) * t + (z0[4:6] + e2) * t2 + rho * t3 - de
    wvel = z0[2:4] + [v0, 0.0] + (z0[4:6] + e2) * t + rho * t2 - vevec
    wacc = z0[4:6] + e2 + rho * t - aevec
    return _kmat(om_t) @ np.concatenate([rd @ wpos, rd @ wvel, rd @ wacc])


def _propagate_c(x0, v0, a0, om, t, nu_pt, nu_at, nu_pe, nu_ae):
    psirel, omg, vg, ag = x0[2], x0[3], x0[4], x0[5]
    dpsi_e = om * t + 0.5 * nu_pe * t * t
    de = np.array(ctra_displacement(0.0, om, v0, a0, t, nu_pe, nu_ae))
    dtgt = np.array(ctra_displacement(0.0, omg, vg, ag, t, nu_pt, nu_at))
    pos = _rot(dpsi_e) @ (x0[0:2] + _rot(psirel).T @ dtgt - de)
    return np.array(
        [
            pos[0],
            pos[1],
            wrap_angle(psirel + (omg - om) * t + 0.5 * (nu_pt - nu_pe) * t * t),
            omg + nu_pt * t,
            vg + ag * t + 0.5 * nu_at * t * t,
            ag + nu_at * t,
        ]
    )


def propagate_relative(
    model: Model,
    rel: RelState,
    ego_in: EgoInput,
    dt: float,
    n: RelNoiseSample | None = None,
    psi0: float = 0.0,
) -> RelState:
    """Closed-form step of the relative dynamics over [0, dt].

    ``psi0`` is the internal global ego heading; it only rotates the target
    jerk noise of models A/B and never affects the zero-noise mean, so
    production callers leave it at 0.
    """
    _check_model(rel, model)
    if n is None:
        n = RelNoiseSample.zero(model)
    v0, a0, om = ego_in.v0, ego_in.a0, ego_in.psidot0
    nu_pe, nu_ae = n.ego.nu_psidd, n.ego.nu_adot
    if model is Model.C:
        if not isinstance(n.target, CtraNoiseSample):
            raise TypeError("model C takes a CtraNoiseSample target noise")
        data = _propagate_c(
            rel.data, v0, a0, om, dt, n.target.nu_psidd, n.target.nu_adot, nu_pe, nu_ae
        )
    else:
        if not isinstance(n.target, JerkNoiseSample):
            raise TypeError("models A/B take a JerkNoiseSample target noise")
        nt = np.array([n.target.nu_jx, n.target.nu_jy])
        data = _propagate_ab(model, rel.data, v0, a0, om, dt, nt, nu_pe, nu_ae, psi0)
    return RelState(model, data)


# ---------------------------------------------------------------------------
# Analytic step Jacobians (evaluated at zero noise).
# ---------------------------------------------------------------------------


def _jacobians_ab(model, x0, v0, a0, om, t, psi0):
    C, S = trig_moments(0.0, om, t)
    phi = om * t
    cphi, sphi = math.cos(phi), math.sin(phi)
    V = v0 + a0 * t
    t2, t3 = 0.5 * t * t, t * t * t / 6.0
    R6 = _r6(phi)
    Phi = wnj_transition(t)
    rd = R6[0:2, 0:2]
    de = np.array([v0 * C[0] + a0 * C[1], v0 * S[0] + a0 * S[1]])

    dde_dom = np.array([-(v0 * S[1] + a0 * S[2]), v0 * C[1] + a0 * C[2]])
    dde_dnp = np.array([-0.5 * (v0 * S[2] + a0 * S[3]), 0.5 * (v0 * C[2] + a0 * C[3])])
    dde_dna = np.array([0.5 * C[2], 0.5 * S[2]])
    rpsi0 = _rot(psi0)
    # Target-jerk columns share the stacked (t^3/6, t^2/2, t) profile.
    tgt_cols = np.vstack([t3 * rpsi0, t2 * rpsi0, t * rpsi0])

    if model is Model.B:
        A = R6 @ Phi
        w = np.concatenate(
            [x0[0:2] + x0[2:4] * t + x0[4:6] * t2 - de, x0[2:4] + x0[4:6] * t, x0[4:6]]
        )
        B = np.zeros((6, 3))
        B[0:2, 0] = rd @ -np.array([C[0], S[0]])
        B[0:2, 1] = rd @ -np.array([C[1], S[1]])
        B[:, 2] = t * (_J6 @ (R6 @ w))
        B[0:2, 2] -= rd @ dde_dom
        G = np.zeros((6, 4))
        G[:, 0:2] = R6 @ tgt_cols
        G[:, 2] = t2 * (_J6 @ (R6 @ w))
        G[0:2, 2] -= rd @ dde_dnp
        G[0:2, 3] = rd @ -dde_dna
        return A, B, G

    K = _kmat(om)
    Km = _kmat(-om)
    KR = K @ R6
    A = KR @ Phi @ Km

    vevec = np.array([V * cphi, V * sphi])
    aevec = np.array([a0 * cphi - V * om * sphi, a0 * sphi + V * om * cphi])
    e2 = np.array([a0, v0 * om])
    z0 = Km @ x0
    q = np.concatenate(
        [
            np.array([v0 * t, 0.0]) + e2 * t2 - de,
            np.array([v0, 0.0]) + e2 * t - vevec,
            e2 - aevec,
        ]
    )
    w = Phi @ z0 + q
    R6w = R6 @ w

    dq_v0 = np.concatenate(
        [
            np.array([t - C[0], om * t2 - S[0]]),
            np.array([1.0 - cphi, om * t - sphi]),
            np.array([om * sphi, om * (1.0 - cphi)]),
        ]
    )
    dq_a0 = np.concatenate(
        [
            np.array([t2 - C[1], -S[1]]),
            np.array([t - t * cphi, -t * sphi]),
            np.array([1.0 - cphi + t * om * sphi, -sphi - t * om * cphi]),
        ]
    )
    dve_dom = V * t * np.array([-sphi, cphi])
    dae_dom = np.array(
        [
            -a0 * t * sphi - V * sphi - V * om * t * cphi,
            a0 * t * cphi + V * cphi - V * om * t * sphi,
        ]
    )
    dq_om = np.concatenate(
        [
            np.array([0.0, v0 * t2]) - dde_dom,
            np.array([0.0, v0 * t]) - dve_dom,
            np.array([0.0, v0]) - dae_dom,
        ]
    )
    B = np.zeros((6, 3))
    B[:, 0] = KR @ dq_v0
    B[:, 1] = KR @ dq_a0
    B[:, 2] = _dkmat(om) @ R6w + t * (K @ (_J6 @ R6w)) + KR @ (Phi @ (_dkmat_neg(om) @ x0) + dq_om)

    dve_dnp = V * t2 * np.array([-sphi, cphi])
    dae_dnp = np.array(
        [
            -a0 * sphi * t2 - V * t * sphi - V * om * cphi * t2,
            a0 * cphi * t2 + V * t * cphi - V * om * sphi * t2,
        ]
    )
    dq_np = np.concatenate([-dde_dnp, -dve_dnp, -dae_dnp])
    dve_dna = t2 * np.array([cphi, sphi])
    dae_dna = np.array([t * cphi - t2 * om * sphi, t * sphi + t2 * om * cphi])
    dq_na = np.concatenate([-dde_dna, -dve_dna, -dae_dna])
    G = np.zeros((6, 4))
    G[:, 0:2] = KR @ tgt_cols
    G[:, 2] = t * (_dkmat(om) @ R6w) + t2 * (K @ (_J6 @ R6w)) + KR @ dq_np
    G[:, 3] = KR @ dq_na
    return A, B, G


def _jacobians_c(x0, v0, a0, om, t):
    psirel, omg, vg, ag = x0[2], x0[3], x0[4], x0[5]
    Ce, Se = trig_moments(0.0, om, t)
    Ct, St = trig_moments(0.0, omg, t)
    re = _rot(om * t)
    rrT = _rot(psirel).T
    de = np.array([v0 * Ce[0] + a0 * Ce[1], v0 * Se[0] + a0 * Se[1]])
    dtgt = np.array([vg * Ct[0] + ag * Ct[1], vg * St[0] + ag * St[1]])
    w2 = x0[0:2] + rrT @ dtgt - de
    t2 = 0.5 * t * t

    A = np.eye(6)
    A[0:2, 0:2] = re
    A[0:2, 2] = re @ (rrT @ (-_J @ dtgt))
    A[0:2, 3] = re @ (rrT @ np.array([-(vg * St[1] + ag * St[2]), vg * Ct[1] + ag * Ct[2]]))
    A[0:2, 4] = re @ (rrT @ np.array([Ct[0], St[0]]))
    A[0:2, 5] = re @ (rrT @ np.array([Ct[1], St[1]]))
    A[2, 3] = t
    A[4, 5] = t

    B = np.zeros((6, 3))
    B[0:2, 0] = re @ -np.array([Ce[0], Se[0]])
    B[0:2, 1] = re @ -np.array([Ce[1], Se[1]])
    B[0:2, 2] = t * (_J @ (re @ w2)) - re @ np.array(
        [-(v0 * Se[1] + a0 * Se[2]), v0 * Ce[1] + a0 * Ce[2]]
    )
    B[2, 2] = -t

    G = np.zeros((6, 4))
    G[0:2, 0] = re @ (rrT @ np.array([-0.5 * (vg * St[2] + ag * St[3]), 0.5 * (vg * Ct[2] + ag * Ct[3])]))
    G[2, 0] = t2
    G[3, 0] = t
    G[0:2, 1] = re @ (rrT @ np.array([0.5 * Ct[2], 0.5 * St[2]]))
    G[4, 1] = t2
    G[5, 1] = t
    G[0:2, 2] = t2 * (_J @ (re @ w2)) - re @ np.array(
        [-0.5 * (v0 * Se[2] + a0 * Se[3]), 0.5 * (v0 * Ce[2] + a0 * Ce[3])]
    )
    G[2, 2] = -t2
    G[0:2, 3] = re @ -np.array([0.5 * Ce[2], 0.5 * Se[2]])
    return A, B, G


def discrete_jacobians(
    model: Model,
    rel: RelState,
    ego_in: EgoInput,
    dt: float,
    psi0: float = 0.0,
) -> DiscreteJacobians:
    """Analytic derivatives of :func:`propagate_relative` at zero noise.

    B differentiates w.r.t. the observable ego input (v0, a0, psidot0) only;
    G w.r.t. the stacked noise (nu_target, nu_ego).  At dt = 0 this is
    (identity, 0, 0).
    """
    _check_model(rel, model)
    v0, a0, om = ego_in.v0, ego_in.a0, ego_in.psidot0
    if model is Model.C:
        A, B, G = _jacobians_c(rel.data, v0, a0, om, dt)
    else:
        A, B, G = _jacobians_ab(model, rel.data, v0, a0, om, dt, psi0)
    return DiscreteJacobians(A, B, G)


def noise_covariances(
    j: DiscreteJacobians, P_ego: np.ndarray, V_rel: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Input and process noise covariances B P B^T and G V G^T, symmetrized."""
    q_in = j.B @ np.asarray(P_ego, dtype=float) @ j.B.T
    q_proc = j.G @ np.asarray(V_rel, dtype=float) @ j.G.T
    return 0.5 * (q_in + q_in.T), 0.5 * (q_proc + q_proc.T)

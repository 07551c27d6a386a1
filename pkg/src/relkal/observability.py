"""Discrete observability matrices and the stochastic observability Gramian.

For a step matrix A and measurement matrix H the observability matrix stacks
(H; HA; ...; HA^(n-1)); the stochastic Gramian weighs it by the inverse
measurement covariance, G = Q^T diag(W^-1, ..., W^-1) Q.  A vanishing
determinant flags state directions that position-only measurements cannot
recover at the chosen linearization point.

With W = I and position measurements, models A and B have
det(G) = 960400 * dt^12 independent of the linearization point; model C loses
rank when its speed and acceleration over ground are both zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .relmodels import discrete_jacobians
from .statespace import EgoInput, Model, RelState

__all__ = ["GramianReport", "observability_matrix", "stochastic_gramian"]

#: Determinant (in its natural scale) below which a point is flagged unobservable.
DET_TOL = 1e-18


@dataclass(frozen=True)
class GramianReport:
    """Summary of one Gramian evaluation."""

    det: float
    min_singular_value: float
    n_blocks: int
    observable: bool


def observability_matrix(A: np.ndarray, H: np.ndarray, n_blocks: int = 6) -> np.ndarray:
    """Stack (H; H A; H A^2; ...; H A^(n_blocks-1))."""
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    A = np.asarray(A, dtype=float)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    rows = [H]
    for _ in range(n_blocks - 1):
        rows.append(rows[-1] @ A)
    return np.vstack(rows)


def stochastic_gramian(
    model: Model,
    rel: RelState,
    ego_in: EgoInput,
    dt: float,
    W: np.ndarray | None = None,
    n_blocks: int = 6,
    det_tol: float = DET_TOL,
) -> GramianReport:
    """Evaluate the position-measurement Gramian at one linearization point.

    ``W`` defaults to the identity, the convention under which the models A/B
    closed form 960400*dt^12 holds.  Raises numpy.linalg.LinAlgError if W is
    singular.
    """
    A = discrete_jacobians(model, rel, ego_in, dt).A
    H = np.zeros((2, 6))
    H[0, 0] = H[1, 1] = 1.0
    q = observability_matrix(A, H, n_blocks)
    w = np.eye(2) if W is None else np.asarray(W, dtype=float)
    w_inv = np.linalg.inv(w)
    k = H.shape[0]
    gram = np.zeros((6, 6))
    for i in range(n_blocks):
        block = q[i * k : (i + 1) * k]
        gram += block.T @ w_inv @ block
    gram = 0.5 * (gram + gram.T)
    det = float(np.linalg.det(gram))
    msv = float(np.linalg.svd(gram, compute_uv=False).min())
    return GramianReport(det, msv, n_blocks, bool(det > det_tol))

"""relkal: relative-coordinate target tracking for automotive sensing.

A library for deriving and running target-tracking dynamics in ego-fixed and
mixed coordinates: global vehicle models, the coordinate machinery with
non-inertial corrections, three relative-dynamics models with closed-form
discrete steps and analytic Jacobians, an EKF pair (ego + target),
observability diagnostics, and a Monte-Carlo benchmark harness.
"""

from .statespace import (
    CartesianState6,
    CtraState,
    DegenerateSpeed,
    EgoInput,
    GaussianBelief,
    Model,
    NoiseSpec,
    RelState,
    cartesian_to_ctra,
    ctra_to_cartesian,
    wrap_angle,
)
from .global_models import (
    CtraNoiseSample,
    JerkNoiseSample,
    ctra_derivative,
    ctra_discrete_jacobians,
    ctra_propagate,
    wnj_propagate,
)
from .frames import (
    Transform6,
    TransformKind,
    from_relative,
    mixing_matrix,
    projector,
    rotation,
    rotation_rates,
    to_relative,
)
from .relmodels import (
    DiscreteJacobians,
    RelNoiseSample,
    discrete_jacobians,
    noise_covariances,
    propagate_relative,
    relative_derivative,
)
from .ekf import (
    MeasurementKind,
    MeasurementModel,
    SingularInnovation,
    ego_input_from,
    ego_predict,
    initialize_ego,
    initialize_track,
    predict,
    update,
)
from .observability import GramianReport, observability_matrix, stochastic_gramian

__version__ = "0.1.0"

__all__ = [
    "CartesianState6",
    "CtraState",
    "DegenerateSpeed",
    "EgoInput",
    "GaussianBelief",
    "Model",
    "NoiseSpec",
    "RelState",
    "cartesian_to_ctra",
    "ctra_to_cartesian",
    "wrap_angle",
    "CtraNoiseSample",
    "JerkNoiseSample",
    "ctra_derivative",
    "ctra_discrete_jacobians",
    "ctra_propagate",
    "wnj_propagate",
    "Transform6",
    "TransformKind",
    "from_relative",
    "mixing_matrix",
    "projector",
    "rotation",
    "rotation_rates",
    "to_relative",
    "DiscreteJacobians",
    "RelNoiseSample",
    "discrete_jacobians",
    "noise_covariances",
    "propagate_relative",
    "relative_derivative",
    "MeasurementKind",
    "MeasurementModel",
    "SingularInnovation",
    "ego_input_from",
    "ego_predict",
    "initialize_ego",
    "initialize_track",
    "predict",
    "update",
    "GramianReport",
    "observability_matrix",
    "stochastic_gramian",
]

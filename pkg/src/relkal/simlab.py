"""Monte-Carlo tracking benchmark: trajectories, measurements, filters, metrics.

The experiment pipeline:

1. Generate ego/target reference trajectories with the turn-rate model
   (process noise per step), plus an extra per-step heading perturbation on
   the target to pull it off the model family.
2. Extract proprioceptive (psidot, v, a) and exteroceptive (rotated relative
   position) measurements with additive white noise at every step.
3. Run the ego filter on the proprioceptive stream; feed its observable
   output into one target filter per enabled model on the exteroceptive
   stream.
4. Score the Euclidean relative-position error per step and reduce to the two
   aggregates avg-over-trajectories of (max over steps) and (mean over steps).

Randomness is drawn from counter-based Philox streams keyed by
(seed, trajectory, channel), so results are bit-identical regardless of how
trajectories are scheduled across workers.  Error samples are rounded to the
12 significant digits used by the CSV writers before aggregation, which makes
published traces and metric tables exactly consistent.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import ekf
from .global_models import CtraNoiseSample, ctra_propagate
from .observability import stochastic_gramian
from .relmodels import discrete_jacobians  # noqa: F401  (re-exported for callers)
from .statespace import CtraState, EgoInput, Model, NoiseSpec, RelState, wrap_angle
from .frames import rotation

__all__ = [
    "ConfigError",
    "StudyConfig",
    "TrajectoryPair",
    "MeasurementFrame",
    "MetricsRow",
    "TrajectoryRun",
    "StudyResult",
    "generate_pair",
    "synthesize_measurements",
    "position_error",
    "aggregate",
    "run_trajectory",
    "run_study",
]

#: Environment variable capping worker parallelism.
THREADS_ENV = "RELKAL_THREADS"

# Stream channel ids (part of the reproducibility contract).
_CH_INIT = 0
_CH_EGO_PROC = 1
_CH_TGT_PROC = 2
_CH_TGT_PSI = 3
_CH_MEAS_PROPRIO = 4
_CH_MEAS_EXTERO = 5


class ConfigError(ValueError):
    """Invalid study configuration."""


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of the benchmark study.

    Initial conditions per trajectory: the ego starts at the origin heading 0
    with speed ~ U(ego_speed_range) and yaw rate ~ U(ego_psidot_range); the
    target starts ahead by U(target_ahead_range) with lateral offset
    U(target_lateral_range), speed U(target_speed_range), heading
    U(target_heading_range), and yaw rate U(target_psidot_range).  Both start
    with zero longitudinal acceleration.
    """

    n_trajectories: int = 50
    duration: float = 20.0
    dt: float = 0.04
    gen_noise: NoiseSpec = field(default_factory=NoiseSpec.default)
    psi_perturb_sigma: float = 0.01
    rng_seed: int = 20210408
    models: tuple[Model, ...] = (Model.A, Model.B, Model.C)
    warmup_exclude_s: float = 0.0
    extero_velocity: bool = False
    extero_velocity_sigma: float = 0.5
    ego_speed_range: tuple[float, float] = (10.0, 30.0)
    ego_psidot_range: tuple[float, float] = (-0.3, 0.3)
    target_ahead_range: tuple[float, float] = (20.0, 80.0)
    target_lateral_range: tuple[float, float] = (-10.0, 10.0)
    target_speed_range: tuple[float, float] = (5.0, 35.0)
    target_heading_range: tuple[float, float] = (-0.2, 0.2)
    target_psidot_range: tuple[float, float] = (-0.3, 0.3)

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if self.duration < self.dt:
            raise ConfigError("duration must be >= dt")
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be >= 1")
        if not self.models:
            raise ConfigError("at least one model must be enabled")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("duplicate models")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be non-negative")
        if self.psi_perturb_sigma < 0 or self.warmup_exclude_s < 0:
            raise ConfigError("sigmas and warm-up must be non-negative")
        if self.warmup_exclude_s >= self.duration:
            raise ConfigError("warm-up exclusion must leave at least one step")
        if self.extero_velocity and set(self.models) != {Model.B}:
            raise ConfigError("the velocity measurement channel is supported for model B only")

    @property
    def n_steps(self) -> int:
        """Samples per trajectory, t = 0 .. duration inclusive."""
        return int(round(self.duration / self.dt)) + 1

    def to_dict(self) -> dict:
        return {
            "n_trajectories": self.n_trajectories,
            "duration": self.duration,
            "dt": self.dt,
            "psi_perturb_sigma": self.psi_perturb_sigma,
            "rng_seed": self.rng_seed,
            "models": [m.value for m in self.models],
            "warmup_exclude_s": self.warmup_exclude_s,
            "extero_velocity": self.extero_velocity,
            "extero_velocity_sigma": self.extero_velocity_sigma,
            "ego_speed_range": list(self.ego_speed_range),
            "ego_psidot_range": list(self.ego_psidot_range),
            "target_ahead_range": list(self.target_ahead_range),
            "target_lateral_range": list(self.target_lateral_range),
            "target_speed_range": list(self.target_speed_range),
            "target_heading_range": list(self.target_heading_range),
            "target_psidot_range": list(self.target_psidot_range),
            "gen_noise": {
                "target_ctra": self.gen_noise.target_ctra.tolist(),
                "target_jerk": self.gen_noise.target_jerk.tolist(),
                "ego_ctra": self.gen_noise.ego_ctra.tolist(),
                "meas_proprio": self.gen_noise.meas_proprio.tolist(),
                "meas_extero": self.gen_noise.meas_extero.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        d = dict(d)
        kwargs: dict = {}
        try:
            if "models" in d:
                kwargs["models"] = tuple(Model(m) for m in d.pop("models"))
            if "gen_noise" in d:
                blocks = {k: np.asarray(v, dtype=float) for k, v in d.pop("gen_noise").items()}
                kwargs["gen_noise"] = NoiseSpec(**blocks)
            for key in (
                "n_trajectories",
                "duration",
                "dt",
                "psi_perturb_sigma",
                "rng_seed",
                "warmup_exclude_s",
                "extero_velocity",
                "extero_velocity_sigma",
            ):
                if key in d:
                    kwargs[key] = d.pop(key)
            for key in (
                "ego_speed_range",
                "ego_psidot_range",
                "target_ahead_range",
                "target_lateral_range",
                "target_speed_range",
                "target_heading_range",
                "target_psidot_range",
            ):
                if key in d:
                    kwargs[key] = tuple(float(x) for x in d.pop(key))
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        if d:
            raise ConfigError(f"unknown config keys: {sorted(d)}")
        return cls(**kwargs)

    def with_overrides(self, **kwargs) -> "StudyConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class TrajectoryPair:
    """Time-aligned ego and target reference trajectories."""

    times: np.ndarray
    ego: list[CtraState]
    target: list[CtraState]

    def __post_init__(self) -> None:
        if not (len(self.times) == len(self.ego) == len(self.target)):
            raise ValueError("trajectory arrays must have equal length")


@dataclass(frozen=True)
class MeasurementFrame:
    """One time step's sensor readings with their noise covariances."""

    t: float
    proprio: np.ndarray  # (psidot, v, a)
    proprio_cov: np.ndarray
    extero: np.ndarray  # (x_rel, y_rel) or (x_rel, y_rel, vx, vy)
    extero_cov: np.ndarray


@dataclass(frozen=True)
class MetricsRow:
    """Aggregated study outcome for one model."""

    model: Model
    avg_max_error: float
    avg_mean_error: float
    gramian_det_range: tuple[float, float]


@dataclass(frozen=True)
class TrajectoryRun:
    """Per-trajectory filter results for every enabled model."""

    traj_index: int
    times: np.ndarray  # step times where errors are recorded (k >= 1)
    errors: dict[Model, np.ndarray]
    gramian_range: dict[Model, tuple[float, float]]
    diverged: dict[Model, bool]
    traces: dict[Model, list[tuple[float, np.ndarray, np.ndarray]]] | None = None


@dataclass(frozen=True)
class StudyResult:
    """Full study output: metric rows plus per-trajectory detail."""

    config: StudyConfig
    metrics: list[MetricsRow]
    runs: list[TrajectoryRun]
    diverged: dict[Model, list[int]]


def _stream(seed: int, traj_index: int, channel: int) -> np.random.Generator:
    key = np.random.SeedSequence(entropy=(seed, traj_index, channel))
    return np.random.Generator(np.random.Philox(key))


def _sqrt_psd(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(np.asarray(cov, dtype=float))
    return v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _round12(x: float) -> float:
    """Round through the 12-significant-digit CSV representation."""
    return float(f"{x:.12g}")


def generate_pair(cfg: StudyConfig, traj_index: int) -> TrajectoryPair:
    """Generate one ego/target trajectory pair.

    Both vehicles follow the turn-rate model with per-step noise from
    ``cfg.gen_noise``; after every step an independent N(0, psi_perturb_sigma^2)
    perturbation is added to the target heading.  Deterministic in
    (cfg.rng_seed, traj_index).
    """
    n = cfg.n_steps
    init = _stream(cfg.rng_seed, traj_index, _CH_INIT)
    ego_v = init.uniform(*cfg.ego_speed_range)
    tgt_x = init.uniform(*cfg.target_ahead_range)
    tgt_y = init.uniform(*cfg.target_lateral_range)
    tgt_v = init.uniform(*cfg.target_speed_range)
    tgt_psi = init.uniform(*cfg.target_heading_range)
    ego_om = init.uniform(*cfg.ego_psidot_range)
    tgt_om = init.uniform(*cfg.target_psidot_range)

    ego = [CtraState(0.0, 0.0, 0.0, ego_om, ego_v, 0.0)]
    target = [CtraState(tgt_x, tgt_y, tgt_psi, tgt_om, tgt_v, 0.0)]

    le = _sqrt_psd(cfg.gen_noise.ego_ctra)
    lt = _sqrt_psd(cfg.gen_noise.target_ctra)
    ego_z = _stream(cfg.rng_seed, traj_index, _CH_EGO_PROC).standard_normal((n - 1, 2))
    tgt_z = _stream(cfg.rng_seed, traj_index, _CH_TGT_PROC).standard_normal((n - 1, 2))
    psi_z = _stream(cfg.rng_seed, traj_index, _CH_TGT_PSI).standard_normal(n - 1)

    for k in range(n - 1):
        ne = le @ ego_z[k]
        nt = lt @ tgt_z[k]
        ego.append(ctra_propagate(ego[-1], cfg.dt, CtraNoiseSample(ne[0], ne[1])))
        step = ctra_propagate(target[-1], cfg.dt, CtraNoiseSample(nt[0], nt[1]))
        psi = wrap_angle(step.psi + cfg.psi_perturb_sigma * psi_z[k])
        target.append(CtraState(step.x, step.y, psi, step.psidot, step.v, step.a))

    times = np.arange(n) * cfg.dt
    return TrajectoryPair(times, ego, target)


def synthesize_measurements(
    tp: TrajectoryPair, cfg: StudyConfig, traj_index: int
) -> list[MeasurementFrame]:
    """Extract noisy proprioceptive and exteroceptive readings per step.

    The exteroceptive reading is the true relative position rotated into the
    ego frame plus white noise (plus the rotated target over-ground velocity
    when the optional velocity channel is enabled).
    """
    n = len(tp.times)
    lp = _sqrt_psd(cfg.gen_noise.meas_proprio)
    if cfg.extero_velocity:
        extero_cov = np.zeros((4, 4))
        extero_cov[0:2, 0:2] = cfg.gen_noise.meas_extero
        extero_cov[2:4, 2:4] = cfg.extero_velocity_sigma**2 * np.eye(2)
    else:
        extero_cov = cfg.gen_noise.meas_extero.copy()
    lx = _sqrt_psd(extero_cov)

    proprio_z = _stream(cfg.rng_seed, traj_index, _CH_MEAS_PROPRIO).standard_normal((n, 3))
    extero_z = _stream(cfg.rng_seed, traj_index, _CH_MEAS_EXTERO).standard_normal(
        (n, extero_cov.shape[0])
    )

    frames = []
    for k in range(n):
        e, t = tp.ego[k], tp.target[k]
        r = rotation(e.psi)
        proprio = np.array([e.psidot, e.v, e.a]) + lp @ proprio_z[k]
        pos = r @ np.array([t.x - e.x, t.y - e.y])
        if cfg.extero_velocity:
            vel = r @ np.array([t.v * math.cos(t.psi), t.v * math.sin(t.psi)])
            extero = np.concatenate([pos, vel]) + lx @ extero_z[k]
        else:
            extero = pos + lx @ extero_z[k]
        frames.append(
            MeasurementFrame(float(tp.times[k]), proprio, cfg.gen_noise.meas_proprio.copy(), extero, extero_cov.copy())
        )
    return frames


def position_error(est: RelState, ego_truth: CtraState, target_truth: CtraState) -> float:
    """Euclidean error of the estimated relative position against truth.

    The reference is the true global position difference rotated into the
    true ego frame; every model carries its relative position in the first
    two state components.
    """
    r = rotation(ego_truth.psi)
    truth = r @ np.array([target_truth.x - ego_truth.x, target_truth.y - ego_truth.y])
    return float(np.hypot(est.data[0] - truth[0], est.data[1] - truth[1]))


def aggregate(errors: list[np.ndarray]) -> tuple[float, float]:
    """Average-of-max and average-of-mean over per-trajectory error arrays."""
    if not errors or any(len(e) == 0 for e in errors):
        raise ValueError("aggregate needs at least one error sample per trajectory")
    maxes = [float(np.max(e)) for e in errors]
    means = [float(np.mean(e)) for e in errors]
    return float(np.mean(maxes)), float(np.mean(means))


def _v_rel(cfg: StudyConfig, model: Model) -> np.ndarray:
    v = np.zeros((4, 4))
    v[0:2, 0:2] = cfg.gen_noise.target_ctra if model is Model.C else cfg.gen_noise.target_jerk
    v[2:4, 2:4] = cfg.gen_noise.ego_ctra
    return v


def run_trajectory(cfg: StudyConfig, traj_index: int, collect_traces: bool = False) -> TrajectoryRun:
    """Run the full filter comparison on one generated trajectory."""
    tp = generate_pair(cfg, traj_index)
    frames = synthesize_measurements(tp, cfg, traj_index)
    n = len(frames)

    meas_proprio = ekf.MeasurementModel.proprio(frames[0].proprio_cov)
    meas_pos = ekf.MeasurementModel.extero_position(cfg.gen_noise.meas_extero)
    if cfg.extero_velocity:
        meas_extero = ekf.MeasurementModel.extero_posvel(frames[0].extero_cov)
    else:
        meas_extero = meas_pos

    ego_belief = ekf.initialize_ego(frames[0].proprio, meas_proprio)
    beliefs: dict[Model, ekf.GaussianBelief | None] = {
        m: ekf.initialize_track(frames[0].extero[:2], meas_pos, m) for m in cfg.models
    }
    v_rel = {m: _v_rel(cfg, m) for m in cfg.models}

    errors = {m: np.full(n - 1, np.nan) for m in cfg.models}
    gram_lo = {m: math.inf for m in cfg.models}
    gram_hi = {m: -math.inf for m in cfg.models}
    diverged = {m: False for m in cfg.models}
    traces: dict[Model, list] | None = {m: [] for m in cfg.models} if collect_traces else None

    for k in range(1, n):
        ego_in = ekf.ego_input_from(ego_belief)
        ego_belief = ekf.ego_predict(ego_belief, cfg.gen_noise.ego_ctra, cfg.dt)
        ego_belief = ekf.update(ego_belief, frames[k].proprio, meas_proprio)
        for m in cfg.models:
            b = beliefs[m]
            if b is None:
                continue
            try:
                b = ekf.predict(b, m, ego_in, v_rel[m], cfg.dt)
                b = ekf.update(b, frames[k].extero, meas_extero)
            except (ekf.SingularInnovation, np.linalg.LinAlgError):
                diverged[m] = True
                beliefs[m] = None
                continue
            if not (np.all(np.isfinite(b.mean.data)) and np.all(np.isfinite(b.cov))):
                diverged[m] = True
                beliefs[m] = None
                continue
            beliefs[m] = b
            errors[m][k - 1] = _round12(position_error(b.mean, tp.ego[k], tp.target[k]))
            if m is Model.C or k == 1:
                det = stochastic_gramian(m, b.mean, ego_in, cfg.dt).det
                gram_lo[m] = min(gram_lo[m], det)
                gram_hi[m] = max(gram_hi[m], det)
            if traces is not None:
                traces[m].append((frames[k].t, b.mean.data.copy(), b.cov.copy()))

    return TrajectoryRun(
        traj_index=traj_index,
        times=tp.times[1:].copy(),
        errors=errors,
        gramian_range={m: (gram_lo[m], gram_hi[m]) for m in cfg.models},
        diverged=diverged,
        traces=traces,
    )


def _max_workers(cfg: StudyConfig, requested: int | None) -> int:
    cap = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            cap = min(cap, max(1, int(env)))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    if requested is not None:
        cap = min(cap, max(1, requested))
    return max(1, min(cap, cfg.n_trajectories))


def run_study(
    cfg: StudyConfig, max_workers: int | None = None, collect_traces: bool = False
) -> StudyResult:
    """Run the full benchmark and aggregate a metrics row per model.

    Trajectories execute concurrently up to ``max_workers`` (further capped by
    the RELKAL_THREADS environment variable); the result is deterministic and
    independent of scheduling.  Trajectories whose filter diverged are
    excluded from the aggregates and reported in ``diverged``.
    """
    workers = _max_workers(cfg, max_workers)
    indices = range(cfg.n_trajectories)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda i: run_trajectory(cfg, i, collect_traces), indices))
    else:
        runs = [run_trajectory(cfg, i, collect_traces) for i in indices]
    runs.sort(key=lambda r: r.traj_index)

    keep = runs[0].times >= cfg.warmup_exclude_s if runs else np.array([], dtype=bool)
    metrics = []
    diverged: dict[Model, list[int]] = {m: [] for m in cfg.models}
    for m in cfg.models:
        kept_errors = []
        lo, hi = math.inf, -math.inf
        for run in runs:
            if run.diverged[m]:
                diverged[m].append(run.traj_index)
                continue
            kept_errors.append(run.errors[m][keep])
            lo = min(lo, run.gramian_range[m][0])
            hi = max(hi, run.gramian_range[m][1])
        if not kept_errors:
            raise RuntimeError(f"every trajectory diverged for model {m.value}")
        avg_max, avg_mean = aggregate(kept_errors)
        metrics.append(MetricsRow(m, avg_max, avg_mean, (lo, hi)))
    return StudyResult(config=cfg, metrics=metrics, runs=runs, diverged=diverged)

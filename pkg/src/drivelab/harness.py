"""Closed-loop rollout orchestration for both control modes.

One SimulationLoop class drives everything: offline rollouts feed it a
synthetic driver, the realtime session host feeds it live commands, and
both produce identical records for identical inputs, which is what makes
session replays reproducible offline.

Loop order per step k (autonomy-in-control):

1. sample sensors from the true state,
2. filter: predict with the previously applied plant input, then the
   measurement update,
3. advance the per-hypothesis regressor windows with visual angles taken
   from each component's own estimate,
4. obtain the driver's suggestion,
5. advisor update: reweight hypotheses by how well each one's predicted
   steering explains the suggestion (skipped while lag histories fill),
6. control from the mixture mean, feedback-linearize at the true pose,
   saturate, and advance the bicycle with RK4.

Human-in-control mode is the same loop minus the estimator: the driver's
command is applied directly and converted to the linearized input it
realized, which is what the record stores.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    Pose,
    DriverCommand,
    apply_linearization,
    feedback_linearize,
    step_continuous,
    clamp_command,
    make_plant,
)
from .controller import Reference, control, closed_loop_matrix
from .belief import (
    predict,
    update_measurement,
    update_advisor,
    mixture_mean,
    Measurement,
    BeliefState,
    MixtureComponent,
)
from .steering import (
    RegressorWindow,
    SyntheticDriver,
    predict_steering,
    visual_angles,
)
from .analysis import (
    residuals,
    autocorrelation,
    ecdf,
    central_cdf,
    central_outliers,
    ks_two_sample,
)
from .records import (
    TrajectoryRecord,
    record_columns,
    MODE_HUMAN,
    MODE_AUTONOMY,
    U_SOURCE_DRIVER,
    U_SOURCE_CONTROLLER,
    SCHEMA_VERSION,
    config_hash,
)
from .config import ScenarioConfig, STREAM_DRIVER, STREAM_SENSORS


class FilterDivergenceError(RuntimeError):
    """A component covariance lost positive-definiteness mid-rollout."""


class ReplayDriver:
    """Feeds back a prerecorded command sequence, one command per step."""

    def __init__(self, deltas, accels):
        self.deltas = np.asarray(deltas, dtype=float)
        self.accels = np.asarray(accels, dtype=float)
        if self.deltas.shape != self.accels.shape:
            raise ValueError("delta and acceleration logs must align")
        self.k = 0

    @classmethod
    def from_record(cls, record: TrajectoryRecord):
        return cls(record.column("delta_cmd"), record.column("a_cmd"))

    def command(self, pose) -> DriverCommand:
        if self.k >= len(self.deltas):
            raise IndexError("replay exhausted")
        cmd = DriverCommand(float(self.deltas[self.k]), float(self.accels[self.k]))
        self.k += 1
        return cmd


def make_synthetic_driver(config: ScenarioConfig) -> SyntheticDriver:
    return SyntheticDriver(
        coeffs=config.driver_coefficients(),
        geometry=config.lane,
        believed_center=config.lane.lane_centers[config.driver.believed_hypothesis],
        noise_std=config.driver.noise_std,
        rng=config.rng(STREAM_DRIVER),
        speed_ref=config.driver.speed_ref,
        delta_max=config.vehicle.delta_max,
        a_max=config.vehicle.a_max,
    )


def _estimated_pose(component: MixtureComponent, x: float) -> Pose:
    xi = component.mean
    theta = math.atan2(xi[2], xi[0])
    v = math.hypot(xi[0], xi[2])
    return Pose(x, float(xi[1]), theta, v)


def _check_positive_definite(belief: BeliefState):
    for i, c in enumerate(belief):
        try:
            np.linalg.cholesky(c.covariance)
        except np.linalg.LinAlgError as exc:
            raise FilterDivergenceError(
                f"component {i} covariance lost positive-definiteness"
            ) from exc


class SimulationLoop:
    """Stateful single-rollout engine shared by offline and live sessions."""

    def __init__(self, config: ScenarioConfig, driver=None):
        config.validate()
        if config.n_steps == 0:
            raise ValueError("empty record: zero-duration scenario")
        self.config = config
        self.mode = config.mode
        init = config.initial
        self.pose = Pose(init.x, init.y, init.theta, init.v)
        self.b_true = float(init.b)
        self.driver = driver
        if self.driver is None and config.driver.kind == "synthetic":
            self.driver = make_synthetic_driver(config)
        self.rng_sensors = config.rng(STREAM_SENSORS)
        self.plant = None
        self.belief = None
        self.windows = None
        self.u_prev = np.zeros(2)
        if self.mode == MODE_AUTONOMY:
            self.plant = make_plant(config.Ts, config.vehicle.kappa)
            # fail fast on unstable gain choices
            closed_loop_matrix(self.plant, config.controller.gains)
            self.belief = config.mixture
            self.windows = [RegressorWindow() for _ in config.lane.lane_centers]
            self.estimator_coeffs = config.driver.coefficients
        self.k = 0
        self.rows = []
        self.columns = record_columns(len(config.lane.lane_centers), self.mode)

    # -- helpers -----------------------------------------------------------
    def _measure(self) -> Measurement:
        noise = self.config.noise
        n1, n2 = self.rng_sensors.standard_normal(2)
        z1 = self.pose.v * math.cos(self.pose.theta) + noise.sigma_z1 * n1
        z2 = self.pose.y + self.b_true + noise.sigma_z2 * n2
        return Measurement(float(z1), float(z2))

    def _reference(self) -> Reference:
        ctl = self.config.controller
        if ctl.reference_center == "estimated":
            centers = np.asarray(self.config.lane.lane_centers)
            y_d = float(self.belief.weights @ centers)
        else:
            y_d = self.config.true_lane_center
        return Reference(xdot_d=ctl.xdot_d, y_d=y_d, ydot_d=ctl.ydot_d)

    def _true_state(self) -> np.ndarray:
        return np.array(
            [
                self.pose.v * math.cos(self.pose.theta),
                self.pose.y,
                self.pose.v * math.sin(self.pose.theta),
                self.b_true,
            ]
        )

    @property
    def done(self) -> bool:
        return self.k >= self.config.n_steps

    # -- one step ----------------------------------------------------------
    def step(self, cmd: DriverCommand = None, stale: bool = False) -> dict:
        """Advance one tick. cmd overrides the internal driver (live input)."""
        if self.done:
            raise RuntimeError("rollout already finished")
        if self.mode == MODE_AUTONOMY:
            frame = self._step_autonomy(cmd, stale)
        else:
            frame = self._step_human(cmd, stale)
        self.k += 1
        frame["done"] = self.done
        return frame

    def _record_visuals(self):
        out = []
        for center in self.config.lane.lane_centers:
            ang = visual_angles(self.pose, center, self.config.lane)
            out += [ang.phi, ang.omega]
        return out

    def _driver_command(self, cmd):
        if cmd is None:
            if self.driver is None:
                raise ValueError("no driver attached and no command supplied")
            cmd = self.driver.command(self.pose)
        clamped, _ = clamp_command(cmd, self.config.vehicle.delta_max,
                                   self.config.vehicle.a_max)
        return clamped

    def _step_human(self, cmd, stale):
        cfg = self.config
        t = self.k * cfg.Ts
        suggestion = self._driver_command(cmd)
        act, sat = suggestion, False
        u = apply_linearization(self.pose, act, cfg.vehicle.kappa)
        row = [
            t, self.pose.x, self.pose.y, self.pose.theta, self.pose.v,
            *self._true_state()[np.array([0, 2, 3])],
            suggestion.delta, suggestion.a, act.delta, act.a,
            u.xddot, u.yddot, float(sat), float(stale), U_SOURCE_DRIVER,
            *self._record_visuals(),
        ]
        self.rows.append(row)
        frame = {
            "step": self.k,
            "t": t,
            "pose": self.pose,
            "applied": act,
            "suggested": None,
            "weights": None,
            "stale": stale,
        }
        self.pose = step_continuous(self.pose, act, cfg.Ts, cfg.vehicle.kappa,
                                    cfg.vehicle.v_min)
        self.u_prev = u.as_array()
        return frame

    def _step_autonomy(self, cmd, stale):
        cfg = self.config
        t = self.k * cfg.Ts
        z = self._measure()
        belief = self.belief
        if self.k > 0:
            belief = predict(belief, self.u_prev, self.plant, cfg.noise)
        belief = update_measurement(belief, z, cfg.noise)
        _check_positive_definite(belief)

        # per-hypothesis windows see the world through their own estimate
        for window, component, center in zip(self.windows, belief,
                                             cfg.lane.lane_centers):
            est = _estimated_pose(component, self.pose.x)
            ang = visual_angles(est, center, cfg.lane)
            window.advance(ang.phi, ang.omega, float(component.mean[2]))

        suggestion = self._driver_command(cmd)

        if cfg.advisor_enabled and all(w.warm for w in self.windows):
            preds = [predict_steering(self.estimator_coeffs, w) for w in self.windows]
            belief = update_advisor(belief, suggestion, np.array(preds), cfg.noise)
        for window in self.windows:
            window.commit(suggestion.delta)

        u_cmd = control(mixture_mean(belief), self._reference(),
                        cfg.controller.gains)
        act, sat = feedback_linearize(
            self.pose, u_cmd, cfg.vehicle.kappa,
            delta_max=cfg.vehicle.delta_max, a_max=cfg.vehicle.a_max,
            v_min=cfg.vehicle.v_min,
        )
        u = apply_linearization(self.pose, act, cfg.vehicle.kappa)
        self.belief = belief
        row = [
            t, self.pose.x, self.pose.y, self.pose.theta, self.pose.v,
            *self._true_state()[np.array([0, 2, 3])],
            suggestion.delta, suggestion.a, act.delta, act.a,
            u.xddot, u.yddot, float(sat), float(stale), U_SOURCE_CONTROLLER,
            *self._record_visuals(),
            *belief.weights.tolist(),
        ]
        self.rows.append(row)
        frame = {
            "step": self.k,
            "t": t,
            "pose": self.pose,
            "applied": act,
            "suggested": suggestion,
            "weights": belief.weights.copy(),
            "stale": stale,
        }
        self.pose = step_continuous(self.pose, act, cfg.Ts, cfg.vehicle.kappa,
                                    cfg.vehicle.v_min)
        self.u_prev = u.as_array()
        return frame

    # -- record assembly ----------------------------------------------------
    def finish(self, partial: bool = False) -> TrajectoryRecord:
        cfg = self.config
        cfg_dict = cfg.to_dict()
        header = {
            "format": "drivelab-trajectory",
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "Ts": cfg.Ts,
            "duration": cfg.duration,
            "n_steps": len(self.rows),
            "n_hypotheses": len(cfg.lane.lane_centers),
            "believed_hypothesis": cfg.driver.believed_hypothesis,
            "seed": cfg.seed,
            "columns": self.columns,
            "config": cfg_dict,
            "config_hash": config_hash(cfg_dict),
            "partial": bool(partial),
        }
        data = (
            np.array(self.rows, dtype=float)
            if self.rows
            else np.empty((0, len(self.columns)))
        )
        return TrajectoryRecord(header, data)


def _run(config: ScenarioConfig, driver) -> TrajectoryRecord:
    loop = SimulationLoop(config, driver)
    while not loop.done:
        loop.step()
    return loop.finish()


def run_human_in_control(config: ScenarioConfig, driver=None) -> TrajectoryRecord:
    """Roll out one human-in-control trajectory; the driver's commands drive."""
    if config.mode != MODE_HUMAN:
        raise ValueError(f"config mode is {config.mode!r}")
    return _run(config, driver)


def run_autonomy_in_control(config: ScenarioConfig, driver=None) -> TrajectoryRecord:
    """Roll out one autonomy-in-control trajectory; the driver only advises."""
    if config.mode != MODE_AUTONOMY:
        raise ValueError(f"config mode is {config.mode!r}")
    return _run(config, driver)


@dataclass
class BatchResult:
    records: list
    errors: dict              # seed -> error string for failed runs
    coefficients: object      # SteeringCoefficients used in the analysis
    residual_series: list
    acf_reports: list
    ecdfs: list
    central_index: object     # int or None
    central_distances: object
    outlier_indices: list
    pairwise_reject: object   # k x k boolean matrix or None
    summary: dict
    summary_hash: str


def run_batch(config: ScenarioConfig, n_runs: int, seeds=None, coeffs=None,
              alpha: float = 0.05, max_lag=None) -> BatchResult:
    """Run n_runs rollouts and the per-trajectory residual analysis.

    Per-run failures are collected into the errors map instead of aborting
    the batch. The summary (and its hash) covers only successful runs and
    is deterministic for a given (config, seeds).
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if seeds is None:
        seeds = [config.seed + i for i in range(n_runs)]
    seeds = list(seeds)
    if len(seeds) != n_runs:
        raise ValueError(f"{len(seeds)} seeds for {n_runs} runs")
    if coeffs is None:
        coeffs = config.driver.coefficients

    records, errors = [], {}
    for seed in seeds:
        run_config = replace(config, seed=int(seed))
        try:
            records.append(_run(run_config, None))
        except Exception as exc:  # noqa: BLE001 - batch aggregates failures
            errors[int(seed)] = f"{type(exc).__name__}: {exc}"

    series = [residuals(r, coeffs) for r in records]
    reports = [autocorrelation(s, max_lag) for s in series]
    cdfs = [ecdf(s) for s in series]

    central_index = None
    central_distances = None
    outliers = []
    reject = None
    if len(cdfs) >= 2:
        central_index, central_distances = central_cdf(cdfs)
        _, outliers = central_outliers(cdfs, alpha)
        k = len(cdfs)
        reject = np.zeros((k, k), dtype=bool)
        for i in range(k):
            for j in range(i + 1, k):
                res = ks_two_sample(cdfs[i], cdfs[j], alpha)
                reject[i, j] = reject[j, i] = res.reject

    summary = {
        "mode": config.mode,
        "alpha": alpha,
        "n_requested": n_runs,
        "n_completed": len(records),
        "seeds": [int(s) for s in seeds],
        "errors": {str(k): v for k, v in sorted(errors.items())},
        "coefficients": [float(v) for v in coeffs.as_vector()],
        "trajectories": [
            {
                "id": r.trajectory_id,
                "n_warm": len(s),
                "is_white": bool(rep.is_white),
                "fraction_outside": rep.fraction_outside,
                "acf_bound": rep.bound,
                "residual_mean": float(np.mean(s.values)),
                "residual_std": float(np.std(s.values)),
            }
            for r, s, rep in zip(records, series, reports)
        ],
        "central_index": central_index,
        "central_distances": (
            [float(v) for v in central_distances]
            if central_distances is not None else None
        ),
        "outlier_indices": [int(i) for i in outliers],
        "pairwise_reject": reject.tolist() if reject is not None else None,
    }
    summary_hash = config_hash(summary)
    return BatchResult(
        records=records,
        errors=errors,
        coefficients=coeffs,
        residual_series=series,
        acf_reports=reports,
        ecdfs=cdfs,
        central_index=central_index,
        central_distances=central_distances,
        outlier_indices=outliers,
        pairwise_reject=reject,
        summary=summary,
        summary_hash=summary_hash,
    )

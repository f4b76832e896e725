"""Scenario configuration: typed in Python, round-trippable through YAML.

A scenario fixes everything a rollout needs: mode, timing, lane layout,
the initial true state, the initial belief mixture, controller gains,
noise scales, and the driver. The default scenario is the two-hypothesis
ambiguity setup: the true right-lane center at y = 0, a ghost center at
y = -1.8 m, and an initial mixture that explains the camera equally well
under either hypothesis, so only the advisor channel can break the tie.

Seeding: one integer seed per scenario; independent substreams are derived
per role (driver exploration noise, sensor noise) so adding a consumer to
one stream never perturbs the others.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from .belief import BeliefState, MixtureComponent, NoiseConfig
from .controller import GainSet
from .records import MODE_HUMAN, MODE_AUTONOMY, config_hash
from .steering import (
    LaneGeometry,
    SteeringCoefficients,
    DEFAULT_DRIVER_COEFFICIENTS,
)
from .dynamics import WHEELBASE, V_MIN, DELTA_MAX, A_MAX

# rng substream tags
STREAM_DRIVER = 1
STREAM_SENSORS = 2


def default_initial_mixture() -> BeliefState:
    """Two equally weighted unit-covariance hypotheses.

    Component 0: the vehicle half a meter below the true center, no bias.
    Component 1: the vehicle at y = 1.3 with bias -1.8, which produces the
    same camera reading y + b = -0.5. The sensors alone cannot tell these
    apart; that ambiguity is the point of the scenario.
    """
    return BeliefState(
        [
            MixtureComponent(np.array([15.0, -0.5, 0.0, 0.0]), np.eye(4), 0.5),
            MixtureComponent(np.array([15.0, 1.3, 0.0, -1.8]), np.eye(4), 0.5),
        ]
    )


@dataclass
class InitialState:
    x: float = 0.0
    y: float = -0.5
    theta: float = 0.0
    v: float = 15.0
    b: float = 0.0   # true camera bias; 0 means hypothesis 0 is the real one


@dataclass
class DriverParams:
    kind: str = "synthetic"              # synthetic | live-session
    coefficients: SteeringCoefficients = field(
        default_factory=lambda: DEFAULT_DRIVER_COEFFICIENTS
    )
    noise_std: float = 0.01
    believed_hypothesis: int = 0
    speed_ref: float = 15.0
    coefficient_scale: float = 1.0       # driver-side perturbation only


@dataclass
class ControllerParams:
    gains: GainSet = field(default_factory=GainSet)
    xdot_d: float = 15.0
    ydot_d: float = 0.0
    # y_d source: "true" tracks the configured true lane center; "estimated"
    # tracks the belief-weighted mix of the hypothesis centers.
    reference_center: str = "true"


@dataclass
class VehicleParams:
    wheelbase: float = WHEELBASE
    v_min: float = V_MIN
    delta_max: float = DELTA_MAX
    a_max: float = A_MAX

    @property
    def kappa(self):
        return 1.0 / self.wheelbase


@dataclass
class SessionParams:
    staleness_ms: float = 500.0
    time_scale: float = 1.0   # >1 runs the wall-clock loop faster; testing aid


@dataclass
class ScenarioConfig:
    mode: str = MODE_HUMAN
    duration: float = 30.0
    Ts: float = 0.1
    seed: int = 0
    lane: LaneGeometry = field(default_factory=lambda: LaneGeometry((0.0, -1.8)))
    true_lane_center: float = 0.0
    initial: InitialState = field(default_factory=InitialState)
    mixture: BeliefState = field(default_factory=default_initial_mixture)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    driver: DriverParams = field(default_factory=DriverParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    session: SessionParams = field(default_factory=SessionParams)
    advisor_enabled: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode not in (MODE_HUMAN, MODE_AUTONOMY):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.driver.kind not in ("synthetic", "live-session"):
            raise ValueError(f"unknown driver kind {self.driver.kind!r}")
        if self.Ts <= 0 or self.duration <= 0:
            raise ValueError("Ts and duration must be positive")
        steps = self.duration / self.Ts
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(
                f"duration/Ts = {steps} is not an integer step count"
            )
        if self.mode == MODE_AUTONOMY and len(self.mixture) != len(self.lane.lane_centers):
            raise ValueError(
                "autonomy mode pairs mixture component i with lane_centers[i]; "
                f"got {len(self.mixture)} components for {len(self.lane.lane_centers)} centers"
            )
        if not (0 <= self.driver.believed_hypothesis < len(self.lane.lane_centers)):
            raise ValueError("believed_hypothesis out of range")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.Ts))

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng([int(self.seed), int(stream)])

    def driver_coefficients(self) -> SteeringCoefficients:
        return self.driver.coefficients.scaled(self.driver.coefficient_scale)

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "duration": self.duration,
            "Ts": self.Ts,
            "seed": self.seed,
            "lane": {
                "centers": list(self.lane.lane_centers),
                "d_near": self.lane.d_near,
                "d_far": self.lane.d_far,
                "width": self.lane.lane_width,
                "true_center": self.true_lane_center,
            },
            "initial": asdict(self.initial),
            "mixture": [
                {
                    "mean": [float(v) for v in c.mean],
                    "covariance": [[float(v) for v in row] for row in c.covariance],
                    "weight": float(c.weight),
                }
                for c in self.mixture
            ],
            "noise": {
                "sigma_z1": self.noise.sigma_z1,
                "sigma_z2": self.noise.sigma_z2,
                "sigma_delta": self.noise.sigma_delta,
                "Q": [[float(v) for v in row] for row in np.asarray(self.noise.Q)],
            },
            "driver": {
                "kind": self.driver.kind,
                "coefficients": {
                    "a": list(self.driver.coefficients.a),
                    "b": list(self.driver.coefficients.b),
                    "c0": self.driver.coefficients.c0,
                    "d": list(self.driver.coefficients.d),
                },
                "noise_std": self.driver.noise_std,
                "believed_hypothesis": self.driver.believed_hypothesis,
                "speed_ref": self.driver.speed_ref,
                "coefficient_scale": self.driver.coefficient_scale,
            },
            "controller": {
                "gains": asdict(self.controller.gains),
                "xdot_d": self.controller.xdot_d,
                "ydot_d": self.controller.ydot_d,
                "reference_center": self.controller.reference_center,
            },
            "vehicle": asdict(self.vehicle),
            "session": asdict(self.session),
            "advisor_enabled": self.advisor_enabled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        lane = d.get("lane", {})
        mix = d.get("mixture")
        if mix is None:
            mixture = default_initial_mixture()
        else:
            mixture = BeliefState(
                [
                    MixtureComponent(
                        np.asarray(c["mean"], dtype=float),
                        np.asarray(c["covariance"], dtype=float),
                        float(c["weight"]),
                    )
                    for c in mix
                ]
            )
        noise = d.get("noise", {})
        driver = d.get("driver", {})
        coeffs = driver.get("coefficients")
        controller = d.get("controller", {})
        return cls(
            mode=d.get("mode", MODE_HUMAN),
            duration=float(d.get("duration", 30.0)),
            Ts=float(d.get("Ts", 0.1)),
            seed=int(d.get("seed", 0)),
            lane=LaneGeometry(
                tuple(lane.get("centers", (0.0, -1.8))),
                d_near=float(lane.get("d_near", 5.0)),
                d_far=float(lane.get("d_far", 50.0)),
                lane_width=float(lane.get("width", 3.7)),
            ),
            true_lane_center=float(lane.get("true_center", 0.0)),
            initial=InitialState(**d.get("initial", {})),
            mixture=mixture,
            noise=NoiseConfig(
                sigma_z1=float(noise.get("sigma_z1", 0.1)),
                sigma_z2=float(noise.get("sigma_z2", 0.2)),
                sigma_delta=float(noise.get("sigma_delta", 0.03)),
                Q=np.asarray(
                    noise.get("Q", np.diag([1e-4, 1e-4, 1e-3, 1e-8])), dtype=float
                ),
            ),
            driver=DriverParams(
                kind=driver.get("kind", "synthetic"),
                coefficients=(
                    SteeringCoefficients(
                        a=tuple(coeffs["a"]),
                        b=tuple(coeffs["b"]),
                        c0=float(coeffs["c0"]),
                        d=tuple(coeffs["d"]),
                    )
                    if coeffs
                    else DEFAULT_DRIVER_COEFFICIENTS
                ),
                noise_std=float(driver.get("noise_std", 0.01)),
                believed_hypothesis=int(driver.get("believed_hypothesis", 0)),
                speed_ref=float(driver.get("speed_ref", 15.0)),
                coefficient_scale=float(driver.get("coefficient_scale", 1.0)),
            ),
            controller=ControllerParams(
                gains=GainSet(**controller.get("gains", {})),
                xdot_d=float(controller.get("xdot_d", 15.0)),
                ydot_d=float(controller.get("ydot_d", 0.0)),
                reference_center=controller.get("reference_center", "true"),
            ),
            vehicle=VehicleParams(**d.get("vehicle", {})),
            session=SessionParams(**d.get("session", {})),
            advisor_enabled=bool(d.get("advisor_enabled", True)),
        )

    def hash(self) -> str:
        return config_hash(self.to_dict())


def save_config(config: ScenarioConfig, path):
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        d = yaml.safe_load(fh)
    if not isinstance(d, dict):
        raise ValueError(f"config file {path} does not hold a mapping")
    return ScenarioConfig.from_dict(d)

"""Kinematic bicycle vehicle model and its control-oriented forms.

The plant is a rear-axle kinematic bicycle. The pose is (x, y, theta, v)
and the inputs are a steering angle delta and a longitudinal acceleration
a. Two companion forms are provided on top of the continuous model:

* an exact feedback linearization between (a, delta) and the Cartesian
  accelerations (xddot, yddot), valid away from standstill, and
* the discrete-time linear plant over xi = [xdot, y, ydot, b] used by the
  lane-keeping controller and the state estimator. The extra state b is a
  constant lane-center bias: the camera can only observe y + b, so b
  encodes which of several candidate lane centers is the real one.

All functions here are pure and deterministic; integration is fixed-step
RK4 so that identical inputs reproduce identical trajectories bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

# Geometry and actuator defaults. The wheelbase is a typical sedan's;
# kappa = 1/L is the curvature gain of the rear-axle bicycle model.
WHEELBASE = 2.8
KAPPA = 1.0 / WHEELBASE
V_MIN = 0.5          # m/s, guards the v**2 * kappa singularity at standstill
DELTA_MAX = 0.5      # rad
A_MAX = 5.0          # m/s^2


class SingularInputError(ValueError):
    """Steering angle at or beyond +-pi/2, where tan(delta) blows up."""


class LowSpeedError(ValueError):
    """Speed below v_min, where the linearization matrix is singular."""


@dataclass
class Pose:
    """Planar vehicle pose: positions in m, heading in rad, speed in m/s."""

    x: float
    y: float
    theta: float
    v: float

    def as_array(self):
        return np.array([self.x, self.y, self.theta, self.v], dtype=float)


@dataclass
class VehicleState:
    """Estimator state xi = [xdot, y, ydot, b].

    b is the lane-center bias in meters. It is constant under the dynamics
    and invisible to the sensors except through the sum y + b.
    """

    xdot: float
    y: float
    ydot: float
    b: float

    def as_array(self):
        return np.array([self.xdot, self.y, self.ydot, self.b], dtype=float)

    @classmethod
    def from_array(cls, xi):
        xi = np.asarray(xi, dtype=float)
        return cls(float(xi[0]), float(xi[1]), float(xi[2]), float(xi[3]))


def state_array(state) -> np.ndarray:
    """Coerce a VehicleState or any length-4 sequence to an ndarray."""
    if isinstance(state, VehicleState):
        return state.as_array()
    xi = np.asarray(state, dtype=float)
    if xi.shape != (4,):
        raise ValueError(f"state must have 4 entries, got shape {xi.shape}")
    return xi


@dataclass
class DriverCommand:
    delta: float   # steering angle, rad
    a: float       # longitudinal acceleration, m/s^2


@dataclass
class LinearizedInput:
    """Cartesian acceleration pair u = [xddot, yddot] fed to the linear plant."""

    xddot: float
    yddot: float

    def as_array(self):
        return np.array([self.xddot, self.yddot], dtype=float)


def input_array(u) -> np.ndarray:
    if isinstance(u, LinearizedInput):
        return u.as_array()
    u = np.asarray(u, dtype=float)
    if u.shape != (2,):
        raise ValueError(f"input must have 2 entries, got shape {u.shape}")
    return u


@dataclass
class PlantModel:
    """Discrete double-integrator lateral plant with a frozen bias state.

    xi(k+1) = A xi(k) + B u(k) with xi = [xdot, y, ydot, b] and
    u = [xddot, yddot]. The fourth row of both matrices leaves b untouched.
    """

    A: np.ndarray
    B: np.ndarray
    Ts: float
    kappa: float

    def step(self, xi, u):
        return self.A @ state_array(xi) + self.B @ input_array(u)


def _check_delta(delta):
    if not abs(delta) < math.pi / 2:
        raise SingularInputError(f"|delta| = {abs(delta):.4f} >= pi/2")


def continuous_derivative(pose: Pose, cmd: DriverCommand, kappa: float = KAPPA) -> np.ndarray:
    """Time derivative (xdot, ydot, thetadot, vdot) of the bicycle model.

    xdot = v cos(theta), ydot = v sin(theta), thetadot = v kappa tan(delta),
    vdot = a.
    """
    _check_delta(cmd.delta)
    return np.array(
        [
            pose.v * math.cos(pose.theta),
            pose.v * math.sin(pose.theta),
            pose.v * kappa * math.tan(cmd.delta),
            cmd.a,
        ]
    )


def _wrap_angle(theta):
    # map to (-pi, pi]
    if -math.pi < theta <= math.pi:
        return theta
    return math.atan2(math.sin(theta), math.cos(theta))


def step_continuous(pose: Pose, cmd: DriverCommand, dt: float, kappa: float = KAPPA,
                    v_min: float = V_MIN) -> Pose:
    """Advance the pose by one fixed RK4 step under a held command."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    _check_delta(cmd.delta)

    def f(s):
        return continuous_derivative(Pose(s[0], s[1], s[2], s[3]), cmd, kappa)

    s = pose.as_array()
    k1 = f(s)
    k2 = f(s + 0.5 * dt * k1)
    k3 = f(s + 0.5 * dt * k2)
    k4 = f(s + dt * k3)
    s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # speed clamp keeps the feedback linearization invertible
    v = max(float(s[3]), v_min)
    return Pose(float(s[0]), float(s[1]), _wrap_angle(float(s[2])), v)


def _rotation(v, theta, kappa):
    # R(v, theta) maps [a, tan(delta)] to [xddot, yddot]; det R = v^2 kappa
    c, s = math.cos(theta), math.sin(theta)
    vk = v * v * kappa
    return np.array([[c, -vk * s], [s, vk * c]])


def apply_linearization(pose: Pose, cmd: DriverCommand, kappa: float = KAPPA) -> LinearizedInput:
    """Convert a driver command into the Cartesian accelerations it produces.

    This is how recorded (a, delta) pairs become plant inputs u: the
    accelerations an onboard accelerometer would report for the kinematic
    model.
    """
    _check_delta(cmd.delta)
    u = _rotation(pose.v, pose.theta, kappa) @ np.array([cmd.a, math.tan(cmd.delta)])
    return LinearizedInput(float(u[0]), float(u[1]))


def feedback_linearize(pose: Pose, target, kappa: float = KAPPA,
                       delta_max: float = DELTA_MAX, a_max: float = A_MAX,
                       v_min: float = V_MIN):
    """Invert the linearization: find (a, delta) realizing (xddot, yddot).

    Returns (DriverCommand, saturated). The command is clipped to the
    actuator limits and the flag reports whether clipping occurred;
    commands saturate rather than error because requested accelerations
    can legitimately exceed what the actuators deliver.

    Raises LowSpeedError below v_min where R(v, theta) is singular.
    """
    if pose.v < v_min:
        raise LowSpeedError(f"v = {pose.v:.3f} < v_min = {v_min}")
    u = input_array(target)
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    a = c * u[0] + s * u[1]
    tan_delta = (-s * u[0] + c * u[1]) / (pose.v * pose.v * kappa)
    delta = math.atan(tan_delta)
    a_c = min(max(a, -a_max), a_max)
    delta_c = min(max(delta, -delta_max), delta_max)
    saturated = (a_c != a) or (delta_c != delta)
    return DriverCommand(delta_c, a_c), saturated


def clamp_command(cmd: DriverCommand, delta_max: float = DELTA_MAX, a_max: float = A_MAX):
    """Clip a command to the actuator limits; returns (command, saturated)."""
    delta = min(max(cmd.delta, -delta_max), delta_max)
    a = min(max(cmd.a, -a_max), a_max)
    return DriverCommand(delta, a), (delta != cmd.delta or a != cmd.a)


def make_plant(Ts: float, kappa: float = KAPPA) -> PlantModel:
    """Discretize the linearized model with sampling time Ts.

    The longitudinal channel integrates xddot into xdot; the lateral
    channel is a double integrator from yddot into (y, ydot); the bias b
    has no dynamics and no input.
    """
    if Ts <= 0:
        raise ValueError("Ts must be positive")
    A = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, Ts, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    B = np.array(
        [
            [Ts, 0.0],
            [0.0, Ts * Ts / 2.0],
            [0.0, Ts],
            [0.0, 0.0],
        ]
    )
    return PlantModel(A=A, B=B, Ts=Ts, kappa=kappa)

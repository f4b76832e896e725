"""Two-point visual steering: geometry, prediction, fitting, synthetic driver.

The driver model is the generalized two-point model. The driver watches a
near point and a far point on the intended lane center; the near-point
angle phi and far-point angle Omega are the visual regressors. Steering
is predicted as a linear combination of the two previous steering angles,
the current and three lagged near-point angles, the current far-point
angle, and the current and previous lateral velocities:

    delta(k) = a0 d(k-1) + a1 d(k-2)
             + b0 phi(k) + b1 phi(k-1) + b2 phi(k-2) + b3 phi(k-3)
             + c0 Omega(k)
             + d0 ydot(k) + d1 ydot(k-1)

Angle convention: phi = theta + psi and Omega = theta + rho, where psi and
rho are the bearings from the vehicle's road-aligned axis to the near and
far points. Positive angles mean the lane center lies to the left of the
heading direction.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Pose, DriverCommand, DELTA_MAX, A_MAX

N_COEFFICIENTS = 9


class WarmupError(ValueError):
    """Prediction requested before the lag histories are filled."""


class RankDeficiencyError(ValueError):
    """Regressor matrix is rank deficient; the data cannot identify the model."""


@dataclass
class LaneGeometry:
    """Candidate lane centers plus the two lookahead distances.

    The lookahead split follows the two-point steering literature: the
    near point sits just ahead of the hood and drives lane position, the
    far point sits toward the horizon and drives anticipation.
    """

    lane_centers: tuple
    d_near: float = 5.0
    d_far: float = 50.0
    lane_width: float = 3.7

    def __post_init__(self):
        self.lane_centers = tuple(float(c) for c in self.lane_centers)
        if not self.lane_centers:
            raise ValueError("need at least one lane center")
        if not (self.d_far > self.d_near > 0):
            raise ValueError("require d_far > d_near > 0")


@dataclass
class VisualAngles:
    phi: float     # near-point angle, theta + psi
    omega: float   # far-point angle, theta + rho
    psi: float     # near-point bearing from the road axis
    rho: float     # far-point bearing from the road axis


def visual_angles(pose: Pose, lane_center: float, geometry: LaneGeometry) -> VisualAngles:
    """Near- and far-point angles for a straight road along x.

    The near point is the spot on the target lane center d_near meters
    ahead; its bearing from the road axis is atan2(y_c - y, d_near), and
    phi adds the vehicle heading so that phi = 0 means the heading points
    straight at the near point's projection.
    """
    psi = math.atan2(lane_center - pose.y, geometry.d_near)
    rho = math.atan2(lane_center - pose.y, geometry.d_far)
    angles = VisualAngles(phi=pose.theta + psi, omega=pose.theta + rho, psi=psi, rho=rho)
    # defining identities, checked at construction
    assert abs(angles.phi - (pose.theta + angles.psi)) <= 1e-12
    assert abs(angles.omega - (pose.theta + angles.rho)) <= 1e-12
    return angles


@dataclass
class SteeringCoefficients:
    """The nine coefficients of the generalized two-point model."""

    a: tuple    # 2 autoregressive terms, lags 1 and 2
    b: tuple    # 4 near-point terms, lags 0..3
    c0: float   # far-point term, lag 0
    d: tuple    # 2 lateral-velocity terms, lags 0 and 1

    def __post_init__(self):
        self.a = tuple(float(v) for v in self.a)
        self.b = tuple(float(v) for v in self.b)
        self.d = tuple(float(v) for v in self.d)
        self.c0 = float(self.c0)
        if len(self.a) != 2 or len(self.b) != 4 or len(self.d) != 2:
            raise ValueError("expected 2 a, 4 b and 2 d coefficients")
        if not np.all(np.isfinite(self.as_vector())):
            raise ValueError("coefficients must be finite")

    def as_vector(self):
        """Order [a0, a1, b0, b1, b2, b3, c0, d0, d1]; matches regressor order."""
        return np.array(self.a + self.b + (self.c0,) + self.d)

    @classmethod
    def from_vector(cls, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (N_COEFFICIENTS,):
            raise ValueError(f"expected {N_COEFFICIENTS} coefficients")
        return cls(a=tuple(vec[0:2]), b=tuple(vec[2:6]), c0=float(vec[6]), d=tuple(vec[7:9]))

    def scaled(self, factor: float):
        """Every coefficient multiplied by factor; used for perturbed drivers."""
        return SteeringCoefficients.from_vector(self.as_vector() * factor)


# Hand-designed default: a low-pass filtered two-point law with mild history
# terms. Chosen to be closed-loop stable on the kinematic bicycle at the
# default sample time (full-loop spectral radius about 0.975), which a raw
# coefficient set identified on a higher-fidelity vehicle need not be.
DEFAULT_DRIVER_COEFFICIENTS = SteeringCoefficients(
    a=(0.72, 0.02),
    b=(0.170, -0.018, 0.009, -0.004),
    c0=-0.29,
    d=(-0.004, 0.0015),
)

# Coefficients identified from a human driver on a straight highway
# lane-keeping task, against a high-fidelity vehicle whose steering and
# tire dynamics filter the command path. They are a realistic example of
# fitted values and exercise the predictor, but they are NOT closed-loop
# stable when used to drive the kinematic bicycle here (the loop's
# linearization has spectral radius well above 1), so do not hand them to
# the synthetic driver; use DEFAULT_DRIVER_COEFFICIENTS for generation.
HUMAN_FITTED_COEFFICIENTS = SteeringCoefficients(
    a=(1.47, 0.51),
    b=(-5.73, 17.32, -17.65, 6.12),
    c0=0.11,
    d=(0.02, -0.02),
)


class RegressorWindow:
    """Lag buffer holding exactly the history the model needs.

    Per step, call advance() with the step's visual angles and lateral
    velocity before predicting, and commit() afterwards with the steering
    angle that was actually issued. The window is warm once four phi
    samples, two ydot samples and two committed steering angles exist;
    the first warm prediction is therefore at the fourth step.
    """

    def __init__(self):
        self._delta = []   # most recent first, length <= 2
        self._phi = []     # most recent first, length <= 4
        self._omega = None
        self._ydot = []    # most recent first, length <= 2

    def advance(self, phi: float, omega: float, ydot: float):
        self._phi = [float(phi)] + self._phi[:3]
        self._omega = float(omega)
        self._ydot = [float(ydot)] + self._ydot[:1]

    def commit(self, delta: float):
        self._delta = [float(delta)] + self._delta[:1]

    @property
    def warm(self) -> bool:
        return len(self._phi) == 4 and len(self._delta) == 2 and len(self._ydot) == 2

    def regressor(self) -> np.ndarray:
        """[d(k-1), d(k-2), phi(k..k-3), Omega(k), ydot(k), ydot(k-1)]."""
        if not self.warm:
            raise WarmupError("lag histories incomplete")
        return np.array(self._delta + self._phi + [self._omega] + self._ydot)

    def copy(self):
        w = RegressorWindow()
        w._delta = list(self._delta)
        w._phi = list(self._phi)
        w._omega = self._omega
        w._ydot = list(self._ydot)
        return w


def predict_steering(coeffs: SteeringCoefficients, window: RegressorWindow) -> float:
    """One-step-ahead steering prediction; raises WarmupError until warm."""
    return float(coeffs.as_vector() @ window.regressor())


def _warmup_steer(pose: Pose, lane_center: float, geometry: LaneGeometry) -> float:
    # simple proportional pull toward the believed center while lags fill
    psi = math.atan2(lane_center - pose.y, geometry.d_near)
    return 0.5 * (psi - pose.theta)


class SyntheticDriver:
    """Stands in for a human participant.

    Steers with the two-point model plus Gaussian exploration noise, holds
    speed loosely toward speed_ref with a proportional law, and keeps its
    own regressor window. Deterministic for a given rng.
    """

    def __init__(self, coeffs: SteeringCoefficients, geometry: LaneGeometry,
                 believed_center: float, noise_std: float = 0.01, rng=None,
                 speed_ref: float = 15.0, k_speed: float = 0.5,
                 delta_max: float = DELTA_MAX, a_max: float = A_MAX):
        self.coeffs = coeffs
        self.geometry = geometry
        self.believed_center = float(believed_center)
        self.noise_std = float(noise_std)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.speed_ref = speed_ref
        self.k_speed = k_speed
        self.delta_max = delta_max
        self.a_max = a_max
        self.window = RegressorWindow()

    def command(self, pose: Pose) -> DriverCommand:
        ang = visual_angles(pose, self.believed_center, self.geometry)
        ydot = pose.v * math.sin(pose.theta)
        self.window.advance(ang.phi, ang.omega, ydot)
        if self.window.warm:
            delta = predict_steering(self.coeffs, self.window)
        else:
            delta = _warmup_steer(pose, self.believed_center, self.geometry)
        # exploration noise is drawn every step so the draw count does not
        # depend on the warm-up boundary
        delta += self.noise_std * float(self.rng.standard_normal())
        delta = min(max(delta, -self.delta_max), self.delta_max)
        self.window.commit(delta)
        a = self.k_speed * (self.speed_ref - pose.v)
        a = min(max(a, -self.a_max), self.a_max)
        return DriverCommand(delta, a)


def synthetic_driver(pose: Pose, lane_center: float, geometry: LaneGeometry,
                     coeffs: SteeringCoefficients, window: RegressorWindow,
                     noise_std: float, rng) -> DriverCommand:
    """Functional single-step form of SyntheticDriver.

    Advances the caller's window with this step's visuals, predicts (or
    uses the warm-up proportional law), adds noise, commits the issued
    angle back into the window and returns the command.
    """
    ang = visual_angles(pose, lane_center, geometry)
    window.advance(ang.phi, ang.omega, pose.v * math.sin(pose.theta))
    if window.warm:
        delta = predict_steering(coeffs, window)
    else:
        delta = _warmup_steer(pose, lane_center, geometry)
    delta += float(noise_std) * float(rng.standard_normal())
    delta = min(max(delta, -DELTA_MAX), DELTA_MAX)
    window.commit(delta)
    a = min(max(0.5 * (15.0 - pose.v), -A_MAX), A_MAX)
    return DriverCommand(delta, a)


@dataclass
class FitDiagnostics:
    n_samples: int
    residual_variance: float
    condition_number: float
    stderr: np.ndarray  # per-coefficient standard errors, shape (9,)


def _regression_arrays(record, hypothesis):
    """Stacked one-step regressors and targets from one trajectory record."""
    delta = record.column("delta_cmd")
    phi = record.column(f"phi_h{hypothesis}")
    omega = record.column(f"omega_h{hypothesis}")
    ydot = record.column("ydot")
    n = len(delta)
    if n < 4:
        return np.empty((0, N_COEFFICIENTS)), np.empty(0)
    X = np.column_stack(
        [
            delta[2:n - 1],   # d(k-1)
            delta[1:n - 2],   # d(k-2)
            phi[3:n],         # phi(k)
            phi[2:n - 1],     # phi(k-1)
            phi[1:n - 2],     # phi(k-2)
            phi[0:n - 3],     # phi(k-3)
            omega[3:n],       # Omega(k)
            ydot[3:n],        # ydot(k)
            ydot[2:n - 1],    # ydot(k-1)
        ]
    )
    return X, delta[3:n]


def fit_coefficients(records, hypothesis=None):
    """Ordinary least squares over stacked one-step regressions.

    records is a list of TrajectoryRecord; the regressors use the visual
    angles logged for the given hypothesis (default: each record's own
    believed hypothesis). Returns (SteeringCoefficients, FitDiagnostics).

    Raises RankDeficiencyError when the stacked regressor matrix has rank
    below nine, which happens for degenerate data such as perfectly
    straight, centered, noise-free driving.
    """
    if not isinstance(records, (list, tuple)):
        records = [records]
    blocks = []
    targets = []
    for rec in records:
        h = rec.believed_hypothesis if hypothesis is None else hypothesis
        X, y = _regression_arrays(rec, h)
        blocks.append(X)
        targets.append(y)
    X = np.vstack(blocks)
    y = np.concatenate(targets)
    if len(y) < N_COEFFICIENTS:
        raise ValueError(f"need at least {N_COEFFICIENTS} warm samples, got {len(y)}")
    coef, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < N_COEFFICIENTS:
        raise RankDeficiencyError(f"regressor rank {rank} < {N_COEFFICIENTS}")
    resid = y - X @ coef
    dof = max(len(y) - N_COEFFICIENTS, 1)
    residual_variance = float(resid @ resid) / dof
    XtX_inv = np.linalg.inv(X.T @ X)
    stderr = np.sqrt(residual_variance * np.diag(XtX_inv))
    diagnostics = FitDiagnostics(
        n_samples=len(y),
        residual_variance=residual_variance,
        condition_number=float(sv[0] / sv[-1]),
        stderr=stderr,
    )
    return SteeringCoefficients.from_vector(coef), diagnostics

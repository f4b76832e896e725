"""Gaussian-mixture Kalman filtering over lane-center hypotheses.

Each mixture component represents one candidate lane center: a Gaussian
over xi = [xdot, y, ydot, b] together with a weight. The dynamics are
linear, so per-component propagation is an ordinary Kalman filter; the
mixture machinery lives entirely in the weights.

Two update channels exist:

* update_measurement fuses the speedometer z1 = xi1 + w1 and the camera
  z2 = xi2 + xi4 + w2. Because the camera only sees y + b, components that
  explain the same z2 stay balanced no matter how long you measure; the
  offset between lane-center hypotheses is unobservable from sensors alone.
* update_advisor fuses a human steering suggestion by asking, per
  hypothesis, "what would the driver have done if this were the true lane
  center?" and reweighting by the Gaussian likelihood of the actual
  suggestion around each predicted angle. Means and covariances are left
  untouched: the suggestion carries information about which hypothesis is
  right, not about where the vehicle is within it.

Weight arithmetic is done in log space so that one confident hypothesis
cannot underflow the rest into NaNs.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PlantModel, state_array, input_array

# measurement model: z1 = xi1 + w1, z2 = xi2 + xi4 + w2
H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 1.0]])

_WEIGHT_TOL = 1e-12


class DegenerateCovarianceError(ValueError):
    """Innovation covariance is not symmetric positive-definite."""


class AdvisorUnderflowWarning(RuntimeWarning):
    """All advisor likelihoods vanished; the update fell back to uniform."""


@dataclass
class NoiseConfig:
    """Sensor, process and advisor noise scales.

    sigma_delta is the standard deviation of the steering-suggestion
    likelihood: how far a human's wheel angle is allowed to wander from
    the model's prediction before a hypothesis loses credibility.
    """

    sigma_z1: float = 0.1
    sigma_z2: float = 0.2
    sigma_delta: float = 0.03
    Q: np.ndarray = field(default_factory=lambda: np.diag([1e-4, 1e-4, 1e-3, 1e-8]))

    def measurement_cov(self):
        return np.diag([self.sigma_z1 ** 2, self.sigma_z2 ** 2])


@dataclass
class Measurement:
    z1: float
    z2: float

    def as_array(self):
        return np.array([self.z1, self.z2], dtype=float)


@dataclass
class MixtureComponent:
    mean: np.ndarray        # xi-hat, shape (4,)
    covariance: np.ndarray  # shape (4, 4), symmetric positive-definite
    weight: float

    def __post_init__(self):
        self.mean = state_array(self.mean)
        self.covariance = np.asarray(self.covariance, dtype=float)
        if self.covariance.shape != (4, 4):
            raise ValueError("covariance must be 4x4")
        if not (0.0 <= self.weight <= 1.0 + _WEIGHT_TOL):
            raise ValueError(f"weight {self.weight} outside [0, 1]")


class BeliefState:
    """Weighted Gaussian mixture; weights must sum to 1 within 1e-12."""

    def __init__(self, components):
        components = list(components)
        if not components:
            raise ValueError("belief needs at least one component")
        total = sum(c.weight for c in components)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        self.components = components

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def weights(self):
        return np.array([c.weight for c in self.components])

    @property
    def means(self):
        return np.stack([c.mean for c in self.components])


def _symmetrize(P):
    return 0.5 * (P + P.T)


def _renormalize(components, log_weights):
    # shift by the max so at least one weight survives exponentiation
    m = np.max(log_weights)
    w = np.exp(log_weights - m)
    w = w / np.sum(w)
    return BeliefState(
        [MixtureComponent(c.mean.copy(), c.covariance.copy(), float(wi))
         for c, wi in zip(components, w)]
    )


def predict(belief: BeliefState, u, plant: PlantModel, noise: NoiseConfig) -> BeliefState:
    """Propagate every component through the linear plant; weights unchanged."""
    u = input_array(u)
    out = []
    for c in belief:
        mean = plant.A @ c.mean + plant.B @ u
        cov = _symmetrize(plant.A @ c.covariance @ plant.A.T + noise.Q)
        out.append(MixtureComponent(mean, cov, c.weight))
    return BeliefState(out)


def update_measurement(belief: BeliefState, z: Measurement, noise: NoiseConfig) -> BeliefState:
    """Per-component Kalman update plus likelihood reweighting.

    The covariance update uses the Joseph form, which stays positive
    semi-definite under roundoff where the short form does not.
    """
    zv = z.as_array() if isinstance(z, Measurement) else np.asarray(z, dtype=float)
    if not np.all(np.isfinite(zv)):
        raise ValueError("measurement must be finite")
    R = noise.measurement_cov()
    out = []
    log_w = np.empty(len(belief))
    for i, c in enumerate(belief):
        S = H @ c.covariance @ H.T + R
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise DegenerateCovarianceError(
                f"innovation covariance not positive-definite for component {i}"
            ) from exc
        innov = zv - H @ c.mean
        # K = P H' S^-1 via two triangular solves
        PHt = c.covariance @ H.T
        K = np.linalg.solve(L.T, np.linalg.solve(L, PHt.T)).T
        mean = c.mean + K @ innov
        IKH = np.eye(4) - K @ H
        cov = _symmetrize(IKH @ c.covariance @ IKH.T + K @ R @ K.T)
        alpha = np.linalg.solve(L, innov)
        log_det = 2.0 * np.sum(np.log(np.diag(L)))
        log_lik = -0.5 * (alpha @ alpha + log_det + 2.0 * math.log(2.0 * math.pi))
        with np.errstate(divide="ignore"):
            log_w[i] = np.log(c.weight) + log_lik
        out.append(MixtureComponent(mean, cov, c.weight))
    return _renormalize(out, log_w)


def update_advisor(belief: BeliefState, suggested, predicted_steering, noise: NoiseConfig) -> BeliefState:
    """Weight-only update from a steering suggestion.

    predicted_steering holds one model-predicted angle per component,
    computed under that component's lane-center hypothesis. If every
    likelihood underflows (absurd predictions or a non-finite suggestion),
    the update degrades to uniform likelihoods, i.e. no reweighting, and
    an AdvisorUnderflowWarning is issued.
    """
    delta_s = float(suggested.delta) if hasattr(suggested, "delta") else float(suggested)
    pred = np.asarray(predicted_steering, dtype=float)
    if pred.shape != (len(belief),):
        raise ValueError(
            f"need one predicted angle per component, got shape {pred.shape} for {len(belief)}"
        )
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        log_lik = -0.5 * ((delta_s - pred) / noise.sigma_delta) ** 2
        log_w = np.log(belief.weights) + log_lik
    if not np.any(np.isfinite(log_w)):
        warnings.warn(
            "all advisor likelihoods underflowed; keeping previous weights",
            AdvisorUnderflowWarning,
        )
        return BeliefState(
            [MixtureComponent(c.mean.copy(), c.covariance.copy(), c.weight) for c in belief]
        )
    return _renormalize(list(belief), log_w)


def mixture_mean(belief: BeliefState) -> np.ndarray:
    """Weighted mean across components; the controller's point estimate."""
    return belief.weights @ belief.means

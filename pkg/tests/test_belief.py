import math
import warnings

import numpy as np
import pytest

from drivelab.belief import (
    AdvisorUnderflowWarning,
    BeliefState,
    DegenerateCovarianceError,
    Measurement,
    MixtureComponent,
    NoiseConfig,
    mixture_mean,
    predict,
    update_advisor,
    update_measurement,
)
from drivelab.config import default_initial_mixture as default_mixture
from drivelab.dynamics import DriverCommand, make_plant


def two_hypothesis_belief():
    return BeliefState(
        [
            MixtureComponent(np.array([15, -0.5, 0, 0.0]), np.eye(4), 0.5),
            MixtureComponent(np.array([15, 1.3, 0, -1.8]), np.eye(4), 0.5),
        ]
    )


def test_belief_rejects_bad_weight_sum():
    with pytest.raises(ValueError):
        BeliefState([MixtureComponent(np.zeros(4), np.eye(4), 0.4)])
    with pytest.raises(ValueError):
        BeliefState(
            [
                MixtureComponent(np.zeros(4), np.eye(4), 0.7),
                MixtureComponent(np.zeros(4), np.eye(4), 0.7),
            ]
        )


def test_belief_rejects_empty():
    with pytest.raises(ValueError):
        BeliefState([])


def test_component_rejects_bad_covariance_shape():
    with pytest.raises(ValueError):
        MixtureComponent(np.zeros(4), np.eye(3), 1.0)


def test_predict_zero_q_identity_cov():
    plant = make_plant(0.1)
    noise = NoiseConfig(Q=np.zeros((4, 4)))
    belief = BeliefState([MixtureComponent(np.zeros(4), np.eye(4), 1.0)])
    out = predict(belief, np.zeros(2), plant, noise)
    assert np.allclose(out.components[0].covariance, plant.A @ plant.A.T, atol=1e-15)


def test_predict_equilibrium_mean():
    plant = make_plant(0.1)
    belief = BeliefState([MixtureComponent(np.array([15, 1.3, 0, -1.8]), np.eye(4), 1.0)])
    out = predict(belief, np.zeros(2), plant, NoiseConfig())
    assert np.array_equal(out.components[0].mean, [15, 1.3, 0, -1.8])


def test_predict_keeps_weights():
    plant = make_plant(0.1)
    rng = np.random.default_rng(7)
    w = rng.random(3)
    w = w / w.sum()
    belief = BeliefState(
        [MixtureComponent(rng.normal(size=4), np.eye(4), wi) for wi in w]
    )
    out = predict(belief, rng.normal(size=2), plant, NoiseConfig())
    assert np.allclose(out.weights, w, atol=1e-15)


def test_update_measurement_symmetric_likelihood():
    # z2 = xi2 + xi4 is identical for both Eq. 10 components, so a
    # measurement at that shared value cannot shift the weights
    belief = two_hypothesis_belief()
    out = update_measurement(belief, Measurement(15.0, -0.5), NoiseConfig())
    assert np.allclose(out.weights, [0.5, 0.5], atol=1e-12)


def test_update_measurement_likelihood_ratio():
    # components predict z2 = 0 and z2 = 3*sqrt(S22); with equal
    # covariances the posterior ratio is exp(4.5)
    sigma = 0.2
    noise = NoiseConfig(sigma_z1=0.1, sigma_z2=sigma)
    P = np.eye(4)
    s22 = math.sqrt(P[1, 1] + P[3, 3] + sigma ** 2)  # H P H' + R, diagonal here
    belief = BeliefState(
        [
            MixtureComponent(np.array([15, 0, 0, 0.0]), P, 0.5),
            MixtureComponent(np.array([15, 3 * s22, 0, 0.0]), P, 0.5),
        ]
    )
    out = update_measurement(belief, Measurement(15.0, 0.0), noise)
    ratio = out.weights[0] / out.weights[1]
    assert ratio == pytest.approx(math.exp(4.5), rel=1e-9)
    assert math.exp(4.5) == pytest.approx(90.017, abs=1e-2)


def naive_kalman_update(mean, cov, z, noise):
    H = np.array([[1, 0, 0, 0], [0, 1, 0, 1.0]])
    R = np.diag([noise.sigma_z1 ** 2, noise.sigma_z2 ** 2])
    S = H @ cov @ H.T + R
    K = cov @ H.T @ np.linalg.inv(S)
    mean2 = mean + K @ (z - H @ mean)
    cov2 = (np.eye(4) - K @ H) @ cov
    return mean2, cov2


def test_update_measurement_matches_reference_filter():
    rng = np.random.default_rng(11)
    noise = NoiseConfig()
    for _ in range(25):
        mean = rng.normal(size=4)
        sq = rng.normal(size=(4, 4))
        cov = sq @ sq.T + 0.5 * np.eye(4)
        z = rng.normal(size=2)
        belief = BeliefState([MixtureComponent(mean, cov, 1.0)])
        out = update_measurement(belief, Measurement(*z), noise)
        m_ref, p_ref = naive_kalman_update(mean, cov, z, noise)
        assert np.allclose(out.components[0].mean, m_ref, atol=1e-9)
        assert np.allclose(out.components[0].covariance, p_ref, atol=1e-9)
        assert out.weights[0] == pytest.approx(1.0)


def test_update_measurement_degenerate_covariance():
    noise = NoiseConfig(sigma_z1=0.0, sigma_z2=0.0)
    belief = BeliefState([MixtureComponent(np.zeros(4), np.zeros((4, 4)), 1.0)])
    with pytest.raises(DegenerateCovarianceError):
        update_measurement(belief, Measurement(0.0, 0.0), noise)


def test_update_measurement_rejects_nonfinite():
    with pytest.raises(ValueError):
        update_measurement(two_hypothesis_belief(), Measurement(np.nan, 0.0), NoiseConfig())


def test_advisor_equal_predictions_no_change():
    belief = two_hypothesis_belief()
    out = update_advisor(belief, DriverCommand(0.07, 0), [0.02, 0.02], NoiseConfig())
    assert np.allclose(out.weights, [0.5, 0.5], atol=1e-15)


def test_advisor_three_sigma_example():
    noise = NoiseConfig(sigma_delta=0.03)
    belief = two_hypothesis_belief()
    out = update_advisor(belief, 0.01, [0.01, 0.01 + 3 * noise.sigma_delta], noise)
    assert out.weights[0] == pytest.approx(0.9890, abs=5e-4)
    assert out.weights[0] == pytest.approx(1 / (1 + math.exp(-4.5)), rel=1e-9)


def test_advisor_accepts_command_or_float():
    belief = two_hypothesis_belief()
    a = update_advisor(belief, DriverCommand(0.05, 0.3), [0.0, 0.1], NoiseConfig())
    b = update_advisor(belief, 0.05, [0.0, 0.1], NoiseConfig())
    assert np.array_equal(a.weights, b.weights)


def test_advisor_leaves_means_and_covariances():
    belief = two_hypothesis_belief()
    out = update_advisor(belief, 0.2, [0.15, 0.4], NoiseConfig())
    for before, after in zip(belief, out):
        assert np.array_equal(before.mean, after.mean)
        assert np.array_equal(before.covariance, after.covariance)
    assert out.weights[0] != pytest.approx(0.5)


def test_advisor_underflow_keeps_weights():
    belief = two_hypothesis_belief()
    with pytest.warns(AdvisorUnderflowWarning):
        out = update_advisor(belief, 0.0, [1e300, -1e300], NoiseConfig())
    assert np.allclose(out.weights, [0.5, 0.5], atol=1e-15)


def test_advisor_prediction_shape_checked():
    with pytest.raises(ValueError):
        update_advisor(two_hypothesis_belief(), 0.0, [0.1], NoiseConfig())


def test_advisor_updates_converge_in_expectation():
    # suggestions consistent with hypothesis 0 drive w0 toward 1; average
    # over noisy suggestion sequences to smooth individual-path wobble
    noise = NoiseConfig(sigma_delta=0.03)
    rng = np.random.default_rng(5)
    preds = [0.0, 0.06]  # 2 sigma apart
    trail = np.zeros(40)
    for _ in range(100):
        belief = two_hypothesis_belief()
        for k in range(40):
            suggestion = rng.normal(0.0, noise.sigma_delta)  # true hypothesis 0
            belief = update_advisor(belief, suggestion, preds, noise)
            trail[k] += belief.weights[0]
    trail /= 100
    assert trail[-1] > 0.95
    assert np.all(np.diff(trail) > -0.02)  # monotone in expectation


def test_mixture_mean_cases():
    single = BeliefState([MixtureComponent(np.array([1, 2, 3, 4.0]), np.eye(4), 1.0)])
    assert np.array_equal(mixture_mean(single), [1, 2, 3, 4])

    eq10 = default_mixture()
    assert np.allclose(mixture_mean(eq10), [15, 0.4, 0, -0.9], atol=1e-12)

    degenerate = BeliefState(
        [
            MixtureComponent(np.array([1, 1, 1, 1.0]), np.eye(4), 1.0),
            MixtureComponent(np.array([9, 9, 9, 9.0]), np.eye(4), 0.0),
        ]
    )
    assert np.array_equal(mixture_mean(degenerate), [1, 1, 1, 1])


def test_default_mixture_matches_scenario():
    belief = default_mixture()
    assert np.array_equal(belief.means[0], [15, -0.5, 0, 0])
    assert np.array_equal(belief.means[1], [15, 1.3, 0, -1.8])
    assert np.allclose(belief.weights, [0.5, 0.5])
    for c in belief:
        assert np.array_equal(c.covariance, np.eye(4))


def test_weights_stay_normalized_through_pipeline():
    plant = make_plant(0.1)
    noise = NoiseConfig()
    rng = np.random.default_rng(2)
    belief = default_mixture()
    for _ in range(50):
        belief = predict(belief, rng.normal(size=2), plant, noise)
        belief = update_measurement(
            belief, Measurement(15 + rng.normal(), rng.normal()), noise
        )
        belief = update_advisor(belief, rng.normal(0, 0.05), rng.normal(0, 0.05, 2), noise)
        assert abs(belief.weights.sum() - 1.0) < 1e-12
        for c in belief:
            assert np.allclose(c.covariance, c.covariance.T, atol=1e-12)
            assert np.all(np.linalg.eigvalsh(c.covariance) > 0)

"""Proportional-derivative reference tracking for autonomy-in-control mode.

The controller acts on the linearized plant: u1 corrects longitudinal
velocity error, u2 corrects lateral position and velocity error. The bias
state is never fed back; it is uncontrollable by construction (no input
reaches it), so closed-loop stability is judged on the controllable block
and the bias contributes a structural unit eigenvalue that is excluded
from the check.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import PlantModel, LinearizedInput, state_array


class InstabilityError(ValueError):
    """Closed loop is not asymptotically stable for the given gains."""


@dataclass
class Reference:
    xdot_d: float
    y_d: float
    ydot_d: float


@dataclass
class GainSet:
    k_xdot: float = 1.0
    k_y: float = 1.0
    k_ydot: float = 1.0


def gain_matrix(gains: GainSet) -> np.ndarray:
    """K as a 2x4 matrix, zero-padded on the bias column."""
    return np.array(
        [
            [gains.k_xdot, 0.0, 0.0, 0.0],
            [0.0, gains.k_y, gains.k_ydot, 0.0],
        ]
    )


def control(state_estimate, ref: Reference, gains: GainSet) -> LinearizedInput:
    """u1 = k_xdot (xdot_d - xi1); u2 = k_y (y_d - xi2) + k_ydot (ydot_d - xi3)."""
    xi = state_array(state_estimate)
    if not np.all(np.isfinite(xi)):
        raise ValueError("state estimate must be finite")
    u1 = gains.k_xdot * (ref.xdot_d - xi[0])
    u2 = gains.k_y * (ref.y_d - xi[1]) + gains.k_ydot * (ref.ydot_d - xi[2])
    return LinearizedInput(float(u1), float(u2))


def closed_loop_matrix(plant: PlantModel, gains: GainSet) -> np.ndarray:
    """A - BK for the padded gain matrix.

    Raises InstabilityError when the controllable block (longitudinal
    channel plus lateral 2x2 block) has spectral radius >= 1. The bias
    eigenvalue is exactly 1 for every gain choice and is not a stability
    defect, so it is excluded.
    """
    M = plant.A - plant.B @ gain_matrix(gains)
    if controllable_spectral_radius(plant, gains) >= 1.0:
        raise InstabilityError(
            f"controllable block spectral radius "
            f"{controllable_spectral_radius(plant, gains):.6f} >= 1"
        )
    return M


def controllable_spectral_radius(plant: PlantModel, gains: GainSet) -> float:
    """Spectral radius of A - BK restricted to the controllable states."""
    M = plant.A - plant.B @ gain_matrix(gains)
    block = M[:3, :3]  # [xdot, y, ydot]; the bias column is zero there
    return float(np.max(np.abs(np.linalg.eigvals(block))))

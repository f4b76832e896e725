"""Drive the kinematic bicycle by hand, then through the linearizing map.

The vehicle model is a rear-axle kinematic bicycle. Steering enters through
tan(delta), so the raw model is nonlinear; the feedback-linearizing map
turns desired accelerations (xddot, yddot) into (delta, a) and makes the
closed loop look like a pair of integrator chains. This script shows both
faces of the same vehicle.
"""

import numpy as np

from drivelab.dynamics import (
    DriverCommand,
    LinearizedInput,
    Pose,
    apply_linearization,
    feedback_linearize,
    make_plant,
    step_continuous,
)


def main():
    print("== constant steering, nonlinear model ==")
    pose = Pose(x=0.0, y=0.0, theta=0.0, v=15.0)
    cmd = DriverCommand(delta=0.05, a=0.0)
    for _ in range(50):
        pose = step_continuous(pose, cmd, 0.1)
    # turn rate v * kappa * tan(delta), 5 seconds of it
    print(f"after 5 s at delta=0.05: x={pose.x:.1f} y={pose.y:.1f} "
          f"theta={pose.theta:.3f} rad")

    print()
    print("== the same vehicle through the linearizing map ==")
    pose = Pose(x=0.0, y=-0.5, theta=0.0, v=15.0)
    # ask for a gentle lateral correction and nothing longitudinal
    cmd, sat = feedback_linearize(pose, LinearizedInput(xddot=0.0, yddot=0.4))
    print(f"requested (xddot=0, yddot=0.4) -> delta={cmd.delta:.5f}, "
          f"a={cmd.a:.3f}, saturated={sat}")
    back = apply_linearization(pose, cmd)
    print(f"mapped back through the model: xddot={back.xddot:.2e}, "
          f"yddot={back.yddot:.5f} (round trip)")

    # ask for far more than tan(delta_max) allows at this speed
    cmd, sat = feedback_linearize(pose, LinearizedInput(xddot=0.0, yddot=80.0))
    print(f"requested yddot=80 -> delta clamps to {cmd.delta:.2f} "
          f"(saturated={sat})")

    print()
    print("== discretized linear plant, Ts = 0.1 ==")
    plant = make_plant(0.1)
    print("A =")
    print(np.array_str(plant.A, precision=3, suppress_small=True))
    print("B =")
    print(np.array_str(plant.B, precision=3, suppress_small=True))
    print("state order: [xdot, y, ydot, b]; the bias row is untouched by "
          "dynamics and input, which is what makes it unobservable later.")


if __name__ == "__main__":
    main()

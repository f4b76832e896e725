"""Autonomy-in-control lane keeping from an offset start.

Runs the full loop (estimator, PD controller on the linearized plant,
feedback linearization, bicycle integration) for 30 seconds starting half a
meter below the lane center, and shows the lateral convergence. With
matplotlib installed a figure is written next to this script.
"""

import numpy as np

from drivelab.config import ScenarioConfig
from drivelab.harness import run_autonomy_in_control


def main():
    cfg = ScenarioConfig(mode="autonomy-in-control", duration=30.0, seed=7)
    rec = run_autonomy_in_control(cfg)

    t = rec.column("t")
    y = rec.column("y")
    v = rec.column("v")
    print(f"{rec.n_steps} steps at Ts={cfg.Ts}, seed={cfg.seed}")
    print(f"y: start {y[0]:+.3f} m, final {y[-1]:+.3f} m")
    settle = t[np.abs(y) < 0.05]
    if settle.size:
        print(f"|y| < 0.05 m from t = {settle[0]:.1f} s")
    print(f"speed holds near the reference: v in "
          f"[{v.min():.2f}, {v.max():.2f}] m/s")

    w0 = rec.column("w_h0")
    print(f"belief weight on the true hypothesis: "
          f"{w0[0]:.2f} -> {w0[-1]:.3f}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("(matplotlib not installed, skipping the figure)")
        return

    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    ax1.plot(t, y)
    ax1.axhline(0.0, color="k", lw=0.5)
    ax1.set_ylabel("lateral offset y [m]")
    ax2.plot(t, rec.column("delta_act"))
    ax2.set_ylabel("applied delta [rad]")
    ax2.set_xlabel("t [s]")
    fig.tight_layout()
    out = __file__.replace(".py", ".png")
    fig.savefig(out, dpi=120)
    print(f"figure written to {out}")


if __name__ == "__main__":
    main()

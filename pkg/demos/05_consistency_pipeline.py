"""Does one steering model describe both control modes? The full pipeline.

Two groups of rollouts: a matched group whose driver uses exactly the
fitted coefficients, and a perturbed group whose driver scales the lag
feedback 1.5x (autonomy-in-control, so the perturbed suggestions never
actuate the vehicle). The question the residual machinery answers: do the
two groups' residual distributions come from the same model?

Also shows the structural wrinkle of the perturbed group: 1.5x on the lag
coefficients makes the suggestion recursion unstable, so suggestions sit on
the delta_max rail and their residual CDFs are nearly degenerate.
"""

import numpy as np

from drivelab.analysis import (
    autocorrelation,
    central_outliers,
    cross_test,
    ecdf,
    residuals,
)
from drivelab.config import DriverParams, InitialState, ScenarioConfig
from drivelab.harness import run_autonomy_in_control, run_human_in_control
from drivelab.steering import fit_coefficients

STARTS = [
    (-0.5, 0.00, 15.0),
    (1.2, 0.05, 12.0),
    (-1.5, -0.04, 18.0),
    (0.8, -0.08, 15.0),
    (-0.9, 0.06, 13.5),
    (1.6, 0.02, 16.5),
]


def main():
    fit_records = []
    for i, (y0, th0, v0) in enumerate(STARTS):
        fit_records.append(run_human_in_control(ScenarioConfig(
            mode="human-in-control",
            duration=50.0,
            seed=300 + i,
            initial=InitialState(y=y0, theta=th0, v=v0),
            driver=DriverParams(noise_std=0.001),
        )))
    fitted, _ = fit_coefficients(fit_records)
    print("coefficients fitted from a dedicated excitation corpus")

    matched = [run_human_in_control(ScenarioConfig(
        mode="human-in-control", duration=30.0, seed=2000 + i,
        driver=DriverParams(coefficients=fitted, noise_std=0.01),
    )) for i in range(10)]
    perturbed = [run_autonomy_in_control(ScenarioConfig(
        mode="autonomy-in-control", duration=30.0, seed=3000 + i,
        driver=DriverParams(
            coefficients=fitted, coefficient_scale=1.5, noise_std=0.01
        ),
    )) for i in range(10)]

    m_res = [residuals(r, fitted) for r in matched]
    p_res = [residuals(r, fitted) for r in perturbed]

    n_white = sum(
        autocorrelation(r.values, max_lag=50).is_white for r in m_res
    )
    print(f"matched group: {n_white}/10 residual series judged white")

    rails = [
        float(np.mean(np.abs(r.column("delta_cmd")) >= 0.499))
        for r in perturbed
    ]
    print(f"perturbed group: suggestions railed at delta_max for "
          f"{100 * min(rails):.0f}..{100 * max(rails):.0f}% of each run")

    m_e = [ecdf(r) for r in m_res]
    p_e = [ecdf(r) for r in p_res]
    result = cross_test(m_e, p_e)
    print(f"cross-test: {100 * result.across_rejection_rate:.0f}% of "
          f"matched-vs-perturbed pairs reject at alpha=0.05")

    for label, group in (("matched", m_e), ("perturbed", p_e)):
        idx, out = central_outliers(group)
        print(f"{label} group central CDF: member {idx}, "
              f"{len(out)}/10 outliers {out}")
    print()
    print("the perturbed group rejects against the matched group on every "
          "pair, which is the decision that matters; its own members also "
          "disagree with each other because railed suggestions leave only "
          "seed-dependent atoms in the residual CDF.")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return

    fig, ax = plt.subplots(figsize=(7, 4))
    for r in m_res:
        xs = np.sort(r.values)
        ax.step(xs, np.arange(1, xs.size + 1) / xs.size, color="C0",
                alpha=0.5, lw=0.8)
    for r in p_res:
        xs = np.sort(r.values)
        ax.step(xs, np.arange(1, xs.size + 1) / xs.size, color="C3",
                alpha=0.5, lw=0.8)
    ax.set_xlabel("residual [rad]")
    ax.set_ylabel("ECDF")
    ax.set_title("matched (blue) vs perturbed (red) residual CDFs")
    fig.tight_layout()
    out = __file__.replace(".py", ".png")
    fig.savefig(out, dpi=120)
    print(f"figure written to {out}")


if __name__ == "__main__":
    main()

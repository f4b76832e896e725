"""Command line front end.

Thin wrappers over the library: each subcommand parses flags, calls the
corresponding harness/analysis entry point, and prints a short human
summary (plus optional JSON reports for machine consumption). All real
logic lives in the importable modules.
"""

import argparse
import asyncio
import json
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .analysis import autocorrelation, central_outliers, ecdf, residuals
from .config import ScenarioConfig, load_config
from .harness import run_autonomy_in_control, run_batch, run_human_in_control
from .records import MODE_AUTONOMY, MODE_HUMAN, load_record, save_record
from .steering import SteeringCoefficients, fit_coefficients


def _load_scenario(path, mode=None, seed=None) -> ScenarioConfig:
    config = load_config(path) if path else ScenarioConfig()
    updates = {}
    if mode is not None:
        updates["mode"] = mode
    if seed is not None:
        updates["seed"] = seed
    return replace(config, **updates) if updates else config


def _load_coeffs(path) -> SteeringCoefficients:
    with open(path) as fh:
        d = yaml.safe_load(fh)
    if isinstance(d, list):
        return SteeringCoefficients.from_vector(d)
    if isinstance(d, dict):
        if "coefficients" in d:
            d = d["coefficients"]
        return SteeringCoefficients(
            a=tuple(d["a"]), b=tuple(d["b"]), c0=float(d["c0"]), d=tuple(d["d"])
        )
    raise ValueError(f"{path}: expected a 9-vector or an a/b/c0/d mapping")


def _dump_coeffs(coeffs: SteeringCoefficients, path, diagnostics=None):
    payload = {
        "a": [float(v) for v in coeffs.a],
        "b": [float(v) for v in coeffs.b],
        "c0": float(coeffs.c0),
        "d": [float(v) for v in coeffs.d],
    }
    if diagnostics is not None:
        payload["diagnostics"] = {
            "n_samples": diagnostics.n_samples,
            "residual_variance": float(diagnostics.residual_variance),
            "condition_number": float(diagnostics.condition_number),
            "stderr": [float(v) for v in diagnostics.stderr],
        }
    with open(path, "w") as fh:
        yaml.safe_dump(payload, fh, sort_keys=False)


def _cmd_simulate(args) -> int:
    config = _load_scenario(args.config, args.mode, args.seed)
    runner = (
        run_autonomy_in_control if config.mode == MODE_AUTONOMY
        else run_human_in_control
    )
    record = runner(config)
    if args.out:
        save_record(record, args.out)
    y = record.column("y")
    print(
        f"{config.mode}: {record.n_steps} steps at Ts={config.Ts}, "
        f"seed={config.seed}, final y={y[-1]:+.4f}"
        + (f", saved {args.out}" if args.out else "")
    )
    return 0


def _record_coeffs(record) -> SteeringCoefficients:
    c = record.header["config"]["driver"]["coefficients"]
    return SteeringCoefficients(
        a=tuple(c["a"]), b=tuple(c["b"]), c0=float(c["c0"]), d=tuple(c["d"])
    )


def _cmd_analyze(args) -> int:
    records = [load_record(p) for p in args.records]
    coeffs = _load_coeffs(args.coeffs) if args.coeffs else None
    rows = []
    cdfs = []
    for path, record in zip(args.records, records):
        c = coeffs if coeffs is not None else _record_coeffs(record)
        series = residuals(record, c)
        report = autocorrelation(series, args.max_lag)
        cdfs.append(ecdf(series))
        rows.append({
            "record": str(path),
            "trajectory_id": record.trajectory_id,
            "mode": record.mode,
            "n_warm": len(series),
            "is_white": bool(report.is_white),
            "fraction_outside": report.fraction_outside,
            "pointwise_bound": report.bound,
            "verdict_band": report.verdict_band,
        })
        print(
            f"{record.trajectory_id} [{record.mode}] "
            f"white={'yes' if report.is_white else 'NO'} "
            f"frac_outside={report.fraction_outside:.3f}"
        )
    result = {"alpha": args.alpha, "records": rows}
    if len(cdfs) >= 2:
        central, outliers = central_outliers(cdfs, args.alpha)
        result["central_index"] = central
        result["outlier_indices"] = outliers
        print(f"central CDF: index {central} ({rows[central]['trajectory_id']}), "
              f"{len(outliers)} outlier(s) at alpha={args.alpha}")
    if args.report:
        Path(args.report).write_text(json.dumps(result, indent=2) + "\n")
        print(f"report written to {args.report}")
    return 0


def _cmd_fit(args) -> int:
    records = [load_record(p) for p in args.records]
    coeffs, diag = fit_coefficients(records)
    if args.out:
        _dump_coeffs(coeffs, args.out, diag)
    vec = ", ".join(f"{v:+.4f}" for v in coeffs.as_vector())
    print(f"fitted [{vec}]")
    print(
        f"n={diag.n_samples} residual_var={diag.residual_variance:.3e} "
        f"cond={diag.condition_number:.1f}"
        + (f", saved {args.out}" if args.out else "")
    )
    return 0


def _cmd_batch(args) -> int:
    config = _load_scenario(args.config)
    seeds = [int(s) for s in args.seeds] if args.seeds else None
    result = run_batch(config, args.runs, seeds=seeds, alpha=args.alpha)
    for entry in result.summary["trajectories"]:
        print(
            f"{entry['id']}: white={'yes' if entry['is_white'] else 'NO'} "
            f"residual_std={entry['residual_std']:.4f}"
        )
    for seed, err in result.errors.items():
        print(f"seed {seed} FAILED: {err}", file=sys.stderr)
    if result.central_index is not None:
        print(f"central CDF index {result.central_index}, "
              f"outliers {result.outlier_indices}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for record in result.records:
            save_record(record, out / f"{record.trajectory_id}.rec")
        print(f"{len(result.records)} record(s) written to {out}")
    if args.report:
        Path(args.report).write_text(json.dumps(result.summary, indent=2) + "\n")
    print(f"summary hash {result.summary_hash}")
    return 1 if result.errors else 0


def _cmd_serve(args) -> int:
    from .session import serve

    config = load_config(args.config) if args.config else None
    if config is None and not args.config_dir:
        print("serve needs --config or --config-dir", file=sys.stderr)
        return 2
    print(f"serving on ws://{args.host}:{args.port}")
    try:
        asyncio.run(serve(
            args.port, config=config, config_dir=args.config_dir,
            out_dir=args.out_dir, host=args.host,
        ))
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drivelab",
        description="shared-autonomy lane-keeping laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one offline rollout")
    p.add_argument("--mode", choices=[MODE_HUMAN, MODE_AUTONOMY])
    p.add_argument("--config", help="scenario YAML (defaults built in)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="record output path (.rec or .npz)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="residual whiteness and CDF analysis")
    p.add_argument("--records", nargs="+", required=True)
    p.add_argument("--coeffs", help="coefficient YAML (default: each record's own)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--report", help="write JSON report here")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("fit", help="least-squares steering model fit")
    p.add_argument("--records", nargs="+", required=True)
    p.add_argument("--out", help="write fitted coefficient YAML here")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("batch", help="seed-swept rollouts plus analysis")
    p.add_argument("--config", help="scenario YAML (defaults built in)")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out-dir", help="save per-run records here")
    p.add_argument("--report", help="write JSON summary here")
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("serve", help="host live websocket sessions")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--config-dir", help="directory of scenario YAMLs")
    p.add_argument("--config", help="fixed scenario YAML for every session")
    p.add_argument("--out-dir", help="save session records here")
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line runner: `bergman-zeros run <config>` and `bergman-zeros list`.

Exit codes: 0 success, 1 configuration or numerical error, 2 a check
threshold was violated under --check.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, experiments
from .config import EXPERIMENT_ANCHORS, EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .report import StatsReport, config_digest


def _dispatch(cfg: ExperimentConfig) -> StatsReport:
    p = cfg.params
    kind = cfg.kind
    if kind == "plateau":
        return experiments.plateau_experiment(
            p["p"], r_min=p["r_min"], r_max=p["r_max"], n_grid=p["n_grid"],
            seed=cfg.seed, tolerance=p["tolerance"],
        )
    if kind == "sup":
        return experiments.sup_experiment(p["p"], seed=cfg.seed, tolerance=p["tolerance"])
    if kind == "model-kernel":
        return experiments.model_kernel_experiment(
            p["rho_prime"], p["curvature"], max_deg=p["max_deg"], seed=cfg.seed,
            parity_step=p["parity_step"], parity_tolerance=p["parity_tolerance"],
        )
    if kind == "equidistribution":
        return experiments.equidistribution_experiment(
            p["p"], p["annulus"], p["samples"], cfg.seed,
            paired=p["paired_seeds"], threads=cfg.threads, slack=p["slack"],
        )
    if kind == "variance":
        return experiments.variance_experiment(
            p["p"], p["testfunction"], p["samples"], cfg.seed,
            threads=cfg.threads, rel_tolerance=p["rel_tolerance"],
        )
    if kind == "clt":
        return experiments.clt_experiment(
            p["p"], p["testfunction"], p["samples"], cfg.seed,
            threads=cfg.threads, ks_level=p["ks_level"],
        )
    if kind == "holes":
        return experiments.hole_probability_experiment(
            p["p"], p["annulus"], p["samples"], cfg.seed, threads=cfg.threads
        )
    if kind == "deviation":
        return experiments.deviation_experiment(
            p["p"], p["annulus"], p["delta"], p["samples"], cfg.seed, threads=cfg.threads
        )
    if kind == "kernel-decay":
        return experiments.kernel_decay_experiment(
            p["p"], p["annulus"], n_pairs=p["n_pairs"], k=p["k"], seed=cfg.seed,
            far_tolerance=p["far_tolerance"],
        )
    if kind == "l1log":
        return experiments.l1log_experiment(p["p"], p["annulus"], seed=cfg.seed)
    raise ConfigError(f"unknown experiment kind '{kind}'")


def _versions() -> dict[str, str]:
    import numpy
    import scipy

    return {"bergman-zeros": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__}


def _run(args: argparse.Namespace) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg = ExperimentConfig(cfg.kind, cfg.params, args.seed, cfg.threads, cfg.out, cfg.source)
    if args.threads is not None:
        cfg = ExperimentConfig(cfg.kind, cfg.params, cfg.seed, args.threads, cfg.out, cfg.source)
    out_dir = Path(args.out if args.out is not None else cfg.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        report = _dispatch(cfg)
    except Exception as exc:  # numerical failures surface as exit 1 with context
        print(f"error: {cfg.kind}: {exc}", file=sys.stderr)
        return 1
    report.metadata["seed"] = cfg.seed
    report.metadata["config_digest"] = config_digest(cfg.digest_payload())
    report.to_csv(out_dir / "results.csv")
    report.to_summary_json(out_dir / "summary.json", _versions())
    for row in report.rows:
        print(row.to_csv_line())
    if args.check:
        for c in report.checks:
            status = "PASS" if c.passed else "FAIL"
            print(f"[{status}] {c.name}: {c.detail}")
        if not report.all_passed:
            return 2
    return 0


def _list(args: argparse.Namespace) -> int:
    if args.json:
        payload = {
            kind: {
                "parameters": {
                    name: {"type": spec.type, "required": spec.required, "default": spec.default}
                    for name, spec in schema.items()
                },
                "anchor": EXPERIMENT_ANCHORS[kind],
            }
            for kind, schema in EXPERIMENTS.items()
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0
    width = max(len(k) for k in EXPERIMENTS)
    for kind in EXPERIMENTS:
        schema = EXPERIMENTS[kind]
        params = ", ".join(
            f"{name}{'' if spec.required else '?'}" for name, spec in schema.items()
        )
        print(f"{kind.ljust(width)}  params: {params}")
        print(f"{''.ljust(width)}  checks: {EXPERIMENT_ANCHORS[kind]}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bergman-zeros",
        description="Punctured-disc Bergman kernels and zero point-process experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment from a YAML config")
    run_p.add_argument("config", help="path to the YAML configuration")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--threads", type=int, default=None, help="worker threads (outputs are unaffected)")
    run_p.add_argument("--out", default=None, help="output directory (default from config)")
    run_p.add_argument("--check", action="store_true", help="exit 2 if any threshold check fails")
    run_p.set_defaults(func=_run)
    list_p = sub.add_parser("list", help="list experiment kinds and their parameters")
    list_p.add_argument("--json", action="store_true", help="machine-readable listing")
    list_p.set_defaults(func=_list)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

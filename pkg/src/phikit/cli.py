"""Command line: one subcommand per experiment plus ``verify-all``.

Outputs go to ``<out>/<experiment>/verdict.json`` and ``data.csv`` and an
``index.json`` at the root. Exit status: 0 all verdicts pass, 1 an invariant
failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import EXPERIMENTS, RunConfig, load_config, parse_grid_overrides
from .errors import ConfigError, InvalidInput, PhiKitError, ScaleOutOfRange

__all__ = ["main", "run", "OUT_ENV"]

OUT_ENV = "PHIKIT_OUT"
DEFAULT_OUT = "phikit-out"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _run_one(name: str, cfg_dict: dict, out: str) -> dict:
    from .experiments import emit_plot_data, run_experiment

    cfg = RunConfig.from_dict(cfg_dict)
    d = Path(out) / name
    d.mkdir(parents=True, exist_ok=True)
    try:
        rep = run_experiment(name, cfg)
    except (InvalidInput, ScaleOutOfRange) as exc:
        # the configuration cannot host this experiment
        (d / "verdict.json").write_text(_dump({"experiment": name, "verdict": "error", "error": str(exc)}))
        return {"experiment": name, "verdict": "error", "status": 2, "failures": [f"configuration: {exc}"]}
    except PhiKitError as exc:
        (d / "verdict.json").write_text(_dump({"experiment": name, "verdict": "fail", "error": str(exc)}))
        return {"experiment": name, "verdict": "fail", "status": 1, "failures": [f"{type(exc).__name__}: {exc}"]}
    (d / "verdict.json").write_text(_dump(rep.to_dict()))
    (d / "data.csv").write_text(emit_plot_data(rep))
    return {"experiment": name, "verdict": "pass" if rep.passes else "fail", "status": 0 if rep.passes else 1,
            "failures": [f"{c.name}: {c.value} not {c.relation} {c.threshold}" for c in rep.failures()]}


def run(cfg: RunConfig, experiments=None, jobs: int = 1, log=sys.stderr) -> int:
    """Execute ``experiments`` (default: the config's list); return the exit status."""
    names = list(cfg.experiments if experiments is None else experiments)
    out = Path(cfg.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    cfg_dict = cfg.to_dict()
    if jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, names, [cfg_dict] * len(names), [str(out)] * len(names)))
    else:
        results = [_run_one(n, cfg_dict, str(out)) for n in names]
    # the output root is left out so that runs into different directories compare byte for byte
    (out / "config.json").write_text(_dump({k: v for k, v in cfg_dict.items() if k != "out"}))
    index = {"experiments": [{"experiment": r["experiment"], "verdict": r["verdict"]} for r in results],
             "verdict": "pass" if all(r["verdict"] == "pass" for r in results) else "fail"}
    (out / "index.json").write_text(_dump(index))
    for r in results:
        print(f"{r['experiment']}: {r['verdict'].upper()}", file=log)
        for f in r["failures"]:
            print(f"  failed invariant: {f}", file=log)
    return max((r["status"] for r in results), default=0)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (unknown keys are rejected)")
    common.add_argument("--out", help=f"output root (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=int, help="base seed")
    common.add_argument("--jobs", type=int, default=1, help="experiments run in parallel")
    common.add_argument("--grid-overrides", help="comma list such as N=128,L=32")
    p = argparse.ArgumentParser(prog="phikit", description="Numerical checks for Littlewood-Paley frames, "
                                "almost diagonal operator matrices and T1-type decompositions.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-all", parents=[common], help="run every experiment listed in the config")
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    sub.add_parser("show-config", parents=[common], help="print the effective configuration")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    data = cfg.to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["out"] = args.out
    if args.grid_overrides:
        data["grid"].update(parse_grid_overrides(args.grid_overrides))
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.jobs < 1:
            raise ConfigError("--jobs: need a positive integer")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.command == "show-config":
        print(cfg.to_json())
        return 0
    names = None if args.command == "verify-all" else [args.command]
    return run(cfg, names, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())

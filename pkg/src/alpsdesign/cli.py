"""Command line entry point: ``alpsdesign {run,sweep,train-model,plot}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .benchmarks import rfpca_train
from .core import BoundsError, DimensionError, EmptyInputError, InvalidInputError, NumericalError
from .harness import (
    SWEEP_BATCHES,
    SWEEP_POOLS,
    CampaignConfig,
    ConfigError,
    StatsSummary,
    plot_convergence,
    run_campaign,
    run_sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def load_config(path) -> dict:
    """Read a TOML campaign file: top-level campaign keys plus
    ``[optimizer_params]`` and an optional ``[sweep]`` table."""
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _campaign_from_args(args) -> tuple[CampaignConfig, dict]:
    raw = load_config(args.config) if args.config else {}
    sweep = raw.pop("sweep", {})
    overrides = {
        "seed": args.seed, "trials": args.trials, "budget": args.budget,
        "optimizer": args.optimizer, "benchmark": args.benchmark, "out": args.out,
        "parallelism": args.parallelism, "model_path": getattr(args, "model", None),
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    for item in args.param or []:
        key, _, value = item.partition("=")
        try:
            raw.setdefault("optimizer_params", {})[key] = json.loads(value)
        except json.JSONDecodeError:
            raw.setdefault("optimizer_params", {})[key] = value
    if args.target:
        try:
            raw["target"] = json.loads(args.target)
        except json.JSONDecodeError:
            raw["target"] = args.target
    try:
        return CampaignConfig(**raw), sweep
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _add_campaign_flags(p):
    p.add_argument("--config", help="TOML campaign file")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--optimizer")
    p.add_argument("--benchmark")
    p.add_argument("--target", help="JSON list of true coefficients, or near-perfect/step/CSV path")
    p.add_argument("--model", help="RF-PCA model file for --benchmark rfpca")
    p.add_argument("--param", action="append", help="optimizer parameter KEY=VALUE (repeatable)")
    p.add_argument("--parallelism", type=int, help="worker processes (default: all cores)")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alpsdesign", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_campaign_flags(sub.add_parser("run", help="repeated-trial campaign"))
    p = sub.add_parser("sweep", help="ALPS batch-size x pool-size grid")
    _add_campaign_flags(p)
    p.add_argument("--n-batch", type=int, nargs="+")
    p.add_argument("--n-s", type=int, nargs="+")

    p = sub.add_parser("train-model", help="fit an RF-PCA forward model from a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pca-k", type=int, default=10)
    p.add_argument("--preset", default="experimental", choices=["default", "experimental"])
    p.add_argument("--material", choices=["inconel", "stainless"])
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("plot", help="overlay convergence curves from summary.json files")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            config, _ = _campaign_from_args(args)
            res = run_campaign(config)
            s = res.summary
            print(f"{config.name} on {config.benchmark}: final eps mean {s.final_mean:.6g} "
                  f"std {s.final_std:.6g} min {s.final_min:.6g} max {s.final_max:.6g}")
        elif args.command == "sweep":
            config, sweep = _campaign_from_args(args)
            batches = args.n_batch or sweep.get("n_batch", SWEEP_BATCHES)
            pools = args.n_s or sweep.get("n_s", SWEEP_POOLS)
            for row in run_sweep(config, batches, pools):
                print(f"n_batch={row['n_batch']:>3} n_s={row['n_s']:>5} "
                      f"mean={row['mean_eps']:.6g} std={row['std_eps']:.6g}")
        elif args.command == "train-model":
            model, report = rfpca_train(args.data, pca_k=args.pca_k, forest_preset=args.preset,
                                        seed=args.seed, material=args.material)
            model.save(args.out)
            print(json.dumps(report.to_dict(), indent=2))
        elif args.command == "plot":
            summaries = [StatsSummary.from_json(json.loads(Path(p).read_text())) for p in args.summaries]
            plot_convergence(summaries, args.out, title=args.title)
    except (ConfigError, InvalidInputError, BoundsError, DimensionError, EmptyInputError,
            OSError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Run every optimizer on one analytic benchmark and overlay the convergence curves.

    python scripts/compare_optimizers.py --benchmark logistic --trials 100 --out results/logistic
"""

import argparse
import json
from dataclasses import dataclass, field
from pathlib import Path

from alpsdesign.harness import CampaignConfig, plot_convergence, run_campaign


@dataclass
class ComparisonConfig:
    benchmark: str = "sinusoid"
    optimizers: list = field(default_factory=lambda: ["alps", "random", "pso", "de", "nm", "bo"])
    trials: int = 100
    budget: int = 100
    seed: int = 0
    parallelism: int = 0
    out: str = "results/comparison"


def run(cfg: ComparisonConfig) -> dict:
    out = Path(cfg.out)
    summaries, table = [], {}
    for name in cfg.optimizers:
        res = run_campaign(CampaignConfig(optimizer=name, benchmark=cfg.benchmark, trials=cfg.trials,
                                          budget=cfg.budget, seed=cfg.seed, parallelism=cfg.parallelism,
                                          out=str(out / name)))
        s = res.summary
        summaries.append(s)
        table[name] = {"mean": s.final_mean, "std": s.final_std, "min": s.final_min, "max": s.final_max}
        print(f"{name:>7}: mean {s.final_mean:.4g}  std {s.final_std:.4g}  "
              f"min {s.final_min:.4g}  max {s.final_max:.4g}")
    plot_convergence(summaries, out / "convergence.svg", title=cfg.benchmark)
    (out / "final_stats.json").write_text(json.dumps(table, indent=2))
    return table


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--benchmark", default="sinusoid", choices=["sinusoid", "logistic"])
    p.add_argument("--optimizers", nargs="+")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=0)
    p.add_argument("--out", default=None)
    a = p.parse_args()
    cfg = ComparisonConfig(benchmark=a.benchmark, trials=a.trials, budget=a.budget, seed=a.seed,
                           parallelism=a.parallelism, out=a.out or f"results/{a.benchmark}")
    if a.optimizers:
        cfg.optimizers = a.optimizers
    run(cfg)


if __name__ == "__main__":
    main()

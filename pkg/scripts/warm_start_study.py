"""Paired cold/warm ALPS runs where a surrogate from target A seeds a search for target B."""

import argparse
import json

import numpy as np

from alpsdesign.benchmarks import LOGISTIC_DEFAULT_TRUE, SINUSOID_DEFAULT_TRUE
from alpsdesign.harness import plot_convergence, run_warm_start_study, summarize

SHIFTED = {
    "sinusoid": (list(SINUSOID_DEFAULT_TRUE), [3.0, 0.12, 1.2, 7.0]),
    "logistic": (list(LOGISTIC_DEFAULT_TRUE), [700.0, 250.0, 0.3]),
}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--benchmark", default="sinusoid", choices=sorted(SHIFTED))
    p.add_argument("--source", type=json.loads, help="JSON list, coefficients of target A")
    p.add_argument("--target", type=json.loads, help="JSON list, coefficients of target B")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--source-budget", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--plot")
    a = p.parse_args()
    source, target = SHIFTED[a.benchmark]
    study = run_warm_start_study(a.benchmark, a.source or source, a.target or target, a.trials,
                                 a.budget, a.source_budget, a.seed, a.parallelism)
    for k in sorted({k for k in (1, 5, 10) if k < a.budget} | {a.budget}):
        print(f"eval {k:>3}: cold {study.cold[:, k - 1].mean():.4g}  warm {study.warm[:, k - 1].mean():.4g}")
    wins = int(np.sum(study.warm[:, -1] <= study.cold[:, -1]))
    print(f"warm start at least as good in {wins}/{a.trials} pairs")
    if a.plot:
        plot_convergence([summarize(study.cold, "cold"), summarize(study.warm, "warm")], a.plot,
                         title=f"{a.benchmark}: warm vs cold start")


if __name__ == "__main__":
    main()

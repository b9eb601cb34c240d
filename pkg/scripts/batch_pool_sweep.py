"""Grid over ALPS batch size and candidate pool size on one benchmark.

    python scripts/batch_pool_sweep.py --benchmark sinusoid --trials 100 --out results/sweep
"""

import argparse

from alpsdesign.harness import SWEEP_BATCHES, SWEEP_POOLS, CampaignConfig, run_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--benchmark", default="sinusoid", choices=["sinusoid", "logistic"])
    p.add_argument("--n-batch", type=int, nargs="+", default=list(SWEEP_BATCHES))
    p.add_argument("--n-s", type=int, nargs="+", default=list(SWEEP_POOLS))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=0)
    p.add_argument("--out", default="results/sweep")
    a = p.parse_args()
    cfg = CampaignConfig(optimizer="alps", benchmark=a.benchmark, trials=a.trials, budget=a.budget,
                         seed=a.seed, parallelism=a.parallelism, out=a.out)
    print(f"{'n_batch':>7} {'n_s':>5} {'mean':>10} {'std':>10}")
    for row in run_sweep(cfg, a.n_batch, a.n_s):
        print(f"{row['n_batch']:>7} {row['n_s']:>5} {row['mean_eps']:>10.4g} {row['std_eps']:>10.4g}")


if __name__ == "__main__":
    main()

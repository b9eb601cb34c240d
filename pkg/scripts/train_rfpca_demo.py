"""Train an RF-PCA forward model on synthetic (or supplied) emissivity data, then invert it.

With ``--data`` the CSV must have columns power_w, speed_mm_s, spacing_um, e_0, ... e_{N-1}.
"""

import argparse
import json

from alpsdesign.alps import AlpsConfig, alps_run
from alpsdesign.benchmarks import (
    MATERIAL_BOUNDS,
    near_perfect_target,
    read_dataset,
    rfpca_fit,
    step_target,
    synthetic_dataset,
)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data")
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--material", default="stainless", choices=sorted(MATERIAL_BOUNDS))
    p.add_argument("--pca-k", type=int, default=10)
    p.add_argument("--preset", default="experimental")
    p.add_argument("--target", default="step", choices=["step", "near-perfect"])
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--save")
    a = p.parse_args()

    if a.data:
        params, curves = read_dataset(a.data)
    else:
        params, curves = synthetic_dataset(a.rows, seed=a.seed, material=a.material)
    model, report = rfpca_fit(params, curves, a.pca_k, a.preset, seed=a.seed,
                              bounds=MATERIAL_BOUNDS[a.material])
    print(json.dumps(report.to_dict(), indent=2))
    if a.save:
        model.save(a.save)

    if a.target == "step":
        target = step_target(model.wavelengths)
    else:
        target = near_perfect_target(model.output_dim, model.wavelengths)
    result = alps_run(target, model, model.bounds, AlpsConfig(n_max=a.budget), seed=a.seed)
    best = result.best
    print(f"best design {best.design.values.round(4).tolist()} with error {best.discrepancy:.4f}")


if __name__ == "__main__":
    main()

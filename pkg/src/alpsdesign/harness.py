"""Repeated-trial campaigns, convergence statistics, sweeps and plots."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines
from .alps import AlpsConfig, alps_run, warm_start_export
from .baselines import ConvergenceTrace, ObjectiveAdapter
from .benchmarks import (
    LOGISTIC_DEFAULT_TRUE,
    SINUSOID_DEFAULT_TRUE,
    LogisticModel,
    RfPcaModel,
    SinusoidModel,
    make_target,
    near_perfect_target,
    step_target,
)
from .core import AlpsError, EmptyInputError, InvalidInputError, RngSeed, TargetCurve, as_seed, ensure_dir
from .forest import ForestParams

log = logging.getLogger(__name__)

LOG_FLOOR = 1e-12


class ConfigError(AlpsError, ValueError):
    pass


def alps_minimize(objective: ObjectiveAdapter, bounds, budget, seed=0, n_init=5, n_batch=5,
                  n_s=600, n_trees=100, max_depth=None, warm_start=None) -> ConvergenceTrace:
    """ALPS behind the common optimizer signature (needs a model-backed objective)."""
    if not isinstance(objective, ObjectiveAdapter):
        raise InvalidInputError("ALPS needs the forward model, pass an ObjectiveAdapter")
    config = AlpsConfig(n_init=n_init, n_batch=n_batch, n_s=n_s, n_max=budget,
                        forest_params=ForestParams(n_trees=n_trees, max_depth=max_depth),
                        warm_start=warm_start)
    alps_run(objective.target, objective.model, bounds, config, seed, ledger=objective.ledger)
    return ConvergenceTrace.from_ledger(objective.ledger)


OPTIMIZERS = {
    "alps": alps_minimize,
    "random": baselines.random_search,
    "pso": baselines.pso_minimize,
    "de": baselines.de_minimize,
    "nm": baselines.nelder_mead,
    "bo": baselines.bo_minimize,
}

BENCHMARKS = {
    "sinusoid": (SinusoidModel, SINUSOID_DEFAULT_TRUE),
    "logistic": (LogisticModel, LOGISTIC_DEFAULT_TRUE),
}


@dataclass
class CampaignConfig:
    """One optimizer on one benchmark target, repeated over ``trials`` seeds.

    ``benchmark`` is ``sinusoid``, ``logistic`` or ``rfpca`` (with
    ``model_path``). ``target`` is a list of true coefficients for the
    analytic benchmarks, or ``near-perfect`` / ``step`` / a CSV path for
    ``rfpca``.
    """

    optimizer: str = "alps"
    optimizer_params: dict = field(default_factory=dict)
    benchmark: str = "sinusoid"
    target: list | str | None = None
    model_path: str | None = None
    trials: int = 100
    budget: int = 100
    seed: int = 0
    out: str | None = None
    parallelism: int = 0
    label: str | None = None

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; choose from {sorted(OPTIMIZERS)}")
        if self.benchmark not in BENCHMARKS and self.benchmark != "rfpca":
            raise ConfigError(f"unknown benchmark {self.benchmark!r}")
        if self.benchmark == "rfpca" and not self.model_path:
            raise ConfigError("the rfpca benchmark needs model_path")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if int(self.budget) != self.budget or self.budget < 1:
            raise ConfigError("budget must be >= 1")

    @property
    def name(self) -> str:
        return self.label or self.optimizer

    def workers(self) -> int:
        return self.parallelism if self.parallelism > 0 else (os.cpu_count() or 1)


def build_problem(config: CampaignConfig):
    """Instantiate ``(forward model, target)`` for a campaign."""
    if config.benchmark == "rfpca":
        model = RfPcaModel.load(config.model_path)
        wanted = config.target or "near-perfect"
        if wanted == "near-perfect":
            target = near_perfect_target(model.output_dim, model.wavelengths)
        elif wanted == "step":
            target = step_target(model.wavelengths)
        elif isinstance(wanted, str):
            target = TargetCurve.from_csv(wanted)
        else:
            target = make_target(model, wanted)
        return model, target
    cls, default_true = BENCHMARKS[config.benchmark]
    model = cls()
    x_true = default_true if config.target is None else np.asarray(config.target, dtype=float)
    return model, make_target(model, x_true)


def trial_seed(master, trial: int) -> RngSeed:
    return as_seed(master).child("trial", trial)


def run_trial(config: CampaignConfig, trial: int) -> np.ndarray:
    model, target = build_problem(config)
    objective = ObjectiveAdapter.create(model, target, config.budget)
    OPTIMIZERS[config.optimizer](objective, model.bounds, config.budget,
                                 trial_seed(config.seed, trial), **config.optimizer_params)
    return ConvergenceTrace.from_ledger(objective.ledger).values


def _run_trial_packed(args):
    return run_trial(*args)


def run_trials(config: CampaignConfig) -> np.ndarray:
    """Best-so-far traces, one row per trial, in trial order."""
    jobs = [(config, t) for t in range(config.trials)]
    workers = min(config.workers(), config.trials)
    if workers <= 1:
        rows = [_run_trial_packed(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_trial_packed, jobs))
    return np.vstack(rows)


def percentiles(samples, q) -> float:
    """Linear-interpolation percentile (the ``(n - 1) * q / 100`` rank rule)."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise EmptyInputError("percentile of an empty sample")
    if not 0.0 <= q <= 100.0:
        raise InvalidInputError(f"q must lie in [0, 100], got {q}")
    return float(np.percentile(samples, q, method="linear"))


@dataclass
class StatsSummary:
    label: str
    mean: np.ndarray
    std: np.ndarray
    p10: np.ndarray
    p90: np.ndarray
    final_mean: float
    final_std: float
    final_min: float
    final_max: float
    n_trials: int
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "n_trials": self.n_trials,
            "per_eval": {
                "mean": self.mean.tolist(),
                "std": self.std.tolist(),
                "p10": self.p10.tolist(),
                "p90": self.p90.tolist(),
            },
            "final": {
                "mean": self.final_mean,
                "std": self.final_std,
                "min": self.final_min,
                "max": self.final_max,
            },
            "config": self.config,
        }

    @classmethod
    def from_json(cls, data: dict) -> "StatsSummary":
        per, fin = data["per_eval"], data["final"]
        return cls(data["label"], *(np.asarray(per[k], dtype=float) for k in ("mean", "std", "p10", "p90")),
                   fin["mean"], fin["std"], fin["min"], fin["max"], data["n_trials"], data.get("config", {}))


def summarize(traces, label: str = "", config: dict | None = None) -> StatsSummary:
    """Per-evaluation mean/std (population)/p10/p90 and final-value statistics."""
    traces = np.atleast_2d(np.asarray(traces, dtype=float))
    final = traces[:, -1]
    return StatsSummary(
        label=label,
        mean=traces.mean(axis=0),
        std=traces.std(axis=0),
        p10=np.percentile(traces, 10, axis=0, method="linear"),
        p90=np.percentile(traces, 90, axis=0, method="linear"),
        final_mean=float(final.mean()),
        final_std=float(final.std()),
        final_min=float(final.min()),
        final_max=float(final.max()),
        n_trials=traces.shape[0],
        config=config or {},
    )


def write_traces(traces, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "eval_index", "best_eps"])
        for t, row in enumerate(traces):
            for k, v in enumerate(row):
                writer.writerow([t, k, repr(float(v))])


def read_traces(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n_trials = max(int(r["trial"]) for r in rows) + 1
    n_evals = max(int(r["eval_index"]) for r in rows) + 1
    out = np.full((n_trials, n_evals), np.nan)
    for r in rows:
        out[int(r["trial"]), int(r["eval_index"])] = float(r["best_eps"])
    return out


@dataclass
class CampaignResult:
    traces: np.ndarray
    summary: StatsSummary
    out: Path | None = None


def _config_echo(config: CampaignConfig) -> dict:
    echo = asdict(config)
    echo.pop("parallelism")
    return json.loads(json.dumps(echo, default=str))


def run_campaign(config: CampaignConfig) -> CampaignResult:
    """Run all trials, aggregate, and write traces.csv, summary.json and convergence.svg."""
    traces = run_trials(config)
    summary = summarize(traces, config.name, _config_echo(config))
    out = None
    if config.out:
        out = ensure_dir(config.out)
        write_traces(traces, out / "traces.csv")
        (out / "summary.json").write_text(json.dumps(summary.to_json(), indent=2))
        plot_convergence([summary], out / "convergence.svg")
    return CampaignResult(traces, summary, out)


SWEEP_BATCHES = (1, 5, 10, 20)
SWEEP_POOLS = (300, 600, 1200)


def run_sweep(config: CampaignConfig, n_batches=SWEEP_BATCHES, n_samples=SWEEP_POOLS) -> list[dict]:
    """ALPS campaign for every ``(n_batch, n_s)`` cell; every cell reuses the master seed."""
    if config.optimizer != "alps":
        raise ConfigError("sweeps vary ALPS batch and pool sizes; optimizer must be alps")
    rows = []
    root = ensure_dir(config.out) if config.out else None
    for nb in n_batches:
        for ns in n_samples:
            params = dict(config.optimizer_params, n_batch=nb, n_s=ns)
            cell_out = str(root / f"nb{nb}_ns{ns}") if root else None
            cell = replace(config, optimizer_params=params, out=cell_out,
                           label=f"ALPS({nb},{ns})")
            res = run_campaign(cell)
            s = res.summary
            rows.append({
                "n_batch": nb, "n_s": ns,
                "mean_eps": s.final_mean, "std_eps": s.final_std,
                "p10_eps": float(s.p10[-1]), "p90_eps": float(s.p90[-1]),
                "min_eps": s.final_min, "max_eps": s.final_max,
                "summary": s, "traces": res.traces,
            })
            log.info("sweep cell n_batch=%d n_s=%d mean=%.4g", nb, ns, s.final_mean)
    if root:
        write_sweep_table(rows, root / "sweep.csv")
        plot_convergence([r["summary"] for r in rows], root / "convergence.svg")
    return rows


SWEEP_COLUMNS = ["n_batch", "n_s", "mean_eps", "std_eps", "p10_eps", "p90_eps", "min_eps", "max_eps"]


def write_sweep_table(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow([r[c] if isinstance(r[c], int) else f"{r[c]:.6g}" for c in SWEEP_COLUMNS])


@dataclass
class WarmStartStudy:
    cold: np.ndarray
    warm: np.ndarray


def _warm_trial(args):
    benchmark, source_true, target_true, budget, source_budget, master, trial, tmpdir = args
    cls, _ = BENCHMARKS[benchmark]
    model = cls()
    seed = trial_seed(master, trial)
    source = alps_run(make_target(model, source_true), model, model.bounds,
                      AlpsConfig(n_max=source_budget), seed.child("source"))
    target = make_target(model, target_true)
    path = Path(tmpdir) / f"ws_{trial}.npz"
    warm_start_export(source, path, model.bounds)
    cold = alps_run(target, model, model.bounds, AlpsConfig(n_max=budget), seed)
    warm = alps_run(target, model, model.bounds, AlpsConfig(n_max=budget, warm_start=path), seed)
    path.unlink()
    return cold.trace, warm.trace


def run_warm_start_study(benchmark: str, source_true, target_true, trials: int = 100,
                         budget: int = 20, source_budget: int = 100, seed=0,
                         parallelism: int = 1, workdir=None) -> WarmStartStudy:
    """Paired cold/warm runs on a shifted target.

    For each trial a source run on ``source_true`` is saved to disk and
    reloaded to seed a run on ``target_true``; the cold run uses the same
    trial seed.
    """
    import tempfile

    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        jobs = [(benchmark, list(source_true), list(target_true), budget, source_budget,
                 as_seed(seed).master, t, tmp) for t in range(trials)]
        if parallelism <= 1:
            pairs = [_warm_trial(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                pairs = list(pool.map(_warm_trial, jobs))
    return WarmStartStudy(np.vstack([p[0] for p in pairs]), np.vstack([p[1] for p in pairs]))


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf", "#000000", "#aec7e8"]


def plot_convergence(summaries, path, floor: float = LOG_FLOOR, title: str = "") -> None:
    """Self-contained SVG of log10(mean best-so-far) with shaded p10-p90 bands."""
    if not summaries:
        raise EmptyInputError("nothing to plot")
    W, H = 720, 440
    left, right, top, bottom = 70, 190, 30, 50
    pw, ph = W - left - right, H - top - bottom
    logs = []
    for s in summaries:
        logs.append(tuple(np.log10(np.maximum(np.asarray(a, dtype=float), floor))
                          for a in (s.mean, s.p10, s.p90)))
    ymin = min(min(l[1].min(), l[0].min()) for l in logs)
    ymax = max(max(l[2].max(), l[0].max()) for l in logs)
    if ymax - ymin < 1e-9:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    n_max = max(len(s.mean) for s in summaries)

    def sx(i):
        return left + (i / max(n_max - 1, 1)) * pw

    def sy(v):
        return top + (ymax - v) / (ymax - ymin) * ph

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for k in range(6):
        v = ymin + (ymax - ymin) * k / 5
        parts.append(f'<text x="{left - 6}" y="{sy(v) + 4:.1f}" font-size="11" text-anchor="end">{v:.2f}</text>')
    for k in range(6):
        i = (n_max - 1) * k / 5
        parts.append(f'<text x="{sx(i):.1f}" y="{top + ph + 16}" font-size="11" text-anchor="middle">{i + 1:.0f}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{H - 10}" font-size="12" text-anchor="middle">model evaluations</text>')
    parts.append(f'<text x="16" y="{top + ph / 2}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 16 {top + ph / 2})">log10 mean best-so-far error</text>')
    if title:
        parts.append(f'<text x="{left + pw / 2}" y="18" font-size="13" text-anchor="middle">{_esc(title)}</text>')
    for j, (s, (lm, lo, hi)) in enumerate(zip(summaries, logs)):
        color = _COLORS[j % len(_COLORS)]
        xs = [sx(i) for i in range(len(lm))]
        band = " ".join(f"{x:.2f},{sy(v):.2f}" for x, v in zip(xs, hi))
        band += " " + " ".join(f"{x:.2f},{sy(v):.2f}" for x, v in zip(reversed(xs), lo[::-1]))
        parts.append(f'<polygon class="band" points="{band}" fill="{color}" fill-opacity="0.18" stroke="none"/>')
        line = " ".join(f"{x:.2f},{sy(v):.2f}" for x, v in zip(xs, lm))
        parts.append(f'<polyline class="mean" points="{line}" fill="none" stroke="{color}" stroke-width="2.5"/>')
        ly = top + 14 + 18 * j
        parts.append(f'<g class="legend"><line x1="{left + pw + 12}" y1="{ly - 4}" x2="{left + pw + 36}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2.5"/>'
                     f'<text x="{left + pw + 42}" y="{ly}" font-size="11">{_esc(s.label or f"run {j}")}</text></g>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")

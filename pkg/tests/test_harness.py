import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from alpsdesign.cli import main
from alpsdesign.harness import (
    CampaignConfig,
    ConfigError,
    StatsSummary,
    percentiles,
    plot_convergence,
    read_traces,
    run_campaign,
    run_sweep,
    summarize,
)
from alpsdesign.core import EmptyInputError

SVG = "{http://www.w3.org/2000/svg}"
QUICK_ALPS = {"n_s": 40, "n_trees": 10}


@pytest.mark.parametrize("q, expected", [(0, 1.0), (100, 5.0), (50, 3.0), (10, 1.4), (90, 4.6)])
def test_percentile_examples(q, expected):
    assert percentiles([5, 1, 3, 2, 4], q) == pytest.approx(expected)


def test_percentile_single_and_empty():
    assert percentiles([7.0], 10) == 7.0
    with pytest.raises(EmptyInputError):
        percentiles([], 50)


def test_summary_of_one_trial():
    s = summarize([[3.0, 2.0, 2.0]], "x")
    np.testing.assert_array_equal(s.mean, [3, 2, 2])
    np.testing.assert_array_equal(s.std, 0.0)
    np.testing.assert_array_equal(s.p10, s.p90)
    back = StatsSummary.from_json(json.loads(json.dumps(s.to_json())))
    np.testing.assert_array_equal(back.mean, s.mean)


def test_summary_uses_population_std():
    s = summarize([[1.0], [3.0]])
    assert s.final_std == 1.0 and s.final_mean == 2.0


def test_campaign_outputs_are_reproducible(tmp_path):
    cfg = dict(optimizer="random", benchmark="logistic", trials=3, budget=12, seed=5, parallelism=1)
    a = run_campaign(CampaignConfig(**cfg, out=str(tmp_path / "a")))
    b = run_campaign(CampaignConfig(**cfg, out=str(tmp_path / "b")))
    assert (tmp_path / "a/traces.csv").read_bytes() == (tmp_path / "b/traces.csv").read_bytes()
    np.testing.assert_array_equal(read_traces(tmp_path / "a/traces.csv"), a.traces)
    summary = json.loads((tmp_path / "a/summary.json").read_text())
    assert summary["n_trials"] == 3 and len(summary["per_eval"]["mean"]) == 12
    assert a.summary.final_mean == b.summary.final_mean


def test_convergence_svg_structure(tmp_path):
    s1 = summarize(np.array([[1.0, 0.5, 0.0], [2.0, 1.0, 0.0]]), "zero")
    s2 = summarize(np.array([[1.0, 0.1, 0.01]]), "b<c")
    path = tmp_path / "plot.svg"
    plot_convergence([s1, s2], path, title="demo")
    root = ET.parse(path).getroot()
    assert root.tag == SVG + "svg"
    legends = [g for g in root.iter(SVG + "g") if g.get("class") == "legend"]
    assert len(legends) == 2
    lines = [p for p in root.iter(SVG + "polyline") if p.get("class") == "mean"]
    ys = [float(pt.split(",")[1]) for pt in lines[0].get("points").split()]
    assert all(np.isfinite(ys))
    with pytest.raises(EmptyInputError):
        plot_convergence([], path)


def test_single_cell_sweep_matches_campaign(tmp_path):
    base = CampaignConfig(optimizer="alps", optimizer_params=dict(QUICK_ALPS), benchmark="sinusoid",
                          trials=2, budget=12, seed=3, parallelism=1)
    rows = run_sweep(CampaignConfig(**{**base.__dict__, "out": str(tmp_path)}), [5], [40])
    direct = run_campaign(CampaignConfig(**{**base.__dict__, "optimizer_params": dict(QUICK_ALPS, n_batch=5)}))
    np.testing.assert_array_equal(rows[0]["traces"], direct.traces)
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header == "n_batch,n_s,mean_eps,std_eps,p10_eps,p90_eps,min_eps,max_eps"
    assert (tmp_path / "nb5_ns40" / "traces.csv").exists()


def test_config_validation():
    with pytest.raises(ConfigError):
        CampaignConfig(optimizer="simulated-annealing")
    with pytest.raises(ConfigError):
        CampaignConfig(benchmark="rfpca")
    with pytest.raises(ConfigError):
        CampaignConfig(trials=0)


def test_cli_run_with_toml(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('optimizer = "pso"\nbenchmark = "sinusoid"\ntrials = 2\nbudget = 15\n'
                   'parallelism = 1\n[optimizer_params]\nswarm_size = 5\n')
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert "final eps mean" in capsys.readouterr().out
    assert (tmp_path / "out" / "convergence.svg").exists()
    assert main(["plot", str(tmp_path / "out" / "summary.json"), "--out", str(tmp_path / "p.svg")]) == 0


def test_cli_exit_codes(tmp_path, monkeypatch):
    assert main(["run", "--optimizer", "nope", "--trials", "1"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["run", "--benchmark", "sinusoid", "--target", "[99, 0.1, 1, 5]",
                 "--trials", "1", "--budget", "5", "--optimizer", "random", "--parallelism", "1"]) == 2
    assert main(["train-model", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "m.npz")]) == 2

    import alpsdesign.baselines as bl

    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("not positive definite")

    monkeypatch.setattr(bl, "cholesky", broken)
    assert main(["run", "--optimizer", "bo", "--benchmark", "logistic", "--trials", "1",
                 "--budget", "8", "--parallelism", "1"]) == 3


def test_cli_train_model(tmp_path, capsys):
    from alpsdesign.benchmarks import synthetic_dataset, write_dataset

    params, curves = synthetic_dataset(40, seed=0, n_wavelengths=25)
    write_dataset(tmp_path / "d.csv", params, curves)
    code = main(["train-model", "--data", str(tmp_path / "d.csv"), "--out", str(tmp_path / "m.npz"),
                 "--pca-k", "3", "--preset", "default", "--material", "stainless"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_components"] == 3
    assert main(["run", "--benchmark", "rfpca", "--model", str(tmp_path / "m.npz"), "--optimizer",
                 "random", "--trials", "1", "--budget", "5", "--parallelism", "1"]) == 0

import json

import numpy as np
import pytest

from nnc.graphs import ZeroTruncatedPoisson, build_graph_configuration, sample_degree_sequence
from nnc.harness import (
    ExperimentConfig,
    ExperimentError,
    _run_trials,
    _resolve_outcomes,
    bootstrap_ci,
    emit_results,
    resolve_graph,
    run_experiment,
)
from nnc.noise_fit import NoiseFitError
from nnc.seeding import make_rng

DILATED = (10.0, 7.0, 5.0, 1.0)


@pytest.fixture(scope="module")
def small_graph():
    rng = make_rng(61)
    degrees = sample_degree_sequence(ZeroTruncatedPoisson(6.0), 150, rng)
    g = build_graph_configuration(degrees, rng)
    assert g.degrees.min() >= 1
    return g


# -- bootstrap ----------------------------------------------------------------


def test_bootstrap_degenerate_samples():
    ci = bootstrap_ci(np.full(50, 3.25), 200, 0.95, make_rng(1))
    assert ci == (3.25, 3.25)


def test_bootstrap_nested_levels():
    x = make_rng(2).normal(size=5_000)
    wide = bootstrap_ci(x, 500, 0.95, make_rng(3))
    narrow = bootstrap_ci(x, 500, 0.5, make_rng(4))
    assert narrow[1] - narrow[0] < wide[1] - wide[0]


def test_bootstrap_sd_statistic_targets_spread():
    x = make_rng(5).normal(scale=2.0, size=10_000)
    lo, hi = bootstrap_ci(x, 400, 0.95, make_rng(6), statistic="sd")
    assert lo < 2.0 < hi


def test_bootstrap_quick_coverage_smoke():
    rng = make_rng(7)
    hits = 0
    metas = 100
    for _ in range(metas):
        x = rng.normal(size=2_000)
        lo, hi = bootstrap_ci(x, 200, 0.95, rng)
        hits += lo <= 0.0 <= hi
    assert 0.85 <= hits / metas <= 1.0


def test_bootstrap_validation():
    with pytest.raises(ValueError):
        bootstrap_ci([], 10, 0.95, make_rng(0))
    with pytest.raises(ValueError):
        bootstrap_ci([1.0], 0, 0.95, make_rng(0))
    with pytest.raises(ValueError):
        bootstrap_ci([1.0], 10, 1.0, make_rng(0))
    with pytest.raises(ValueError):
        bootstrap_ci([1.0], 10, 0.95, make_rng(0), statistic="median")


# -- configuration ------------------------------------------------------------


def test_config_validation():
    g_spec = {"source": "generate", "kind": "ztp", "n_v": 50, "mean_degree": 4.0, "seed": 1}
    ExperimentConfig(graph=g_spec, alpha=0.01, beta=0.1, p=0.1, trials=10)
    with pytest.raises(ValueError):
        ExperimentConfig(graph=g_spec, alpha=0.01, beta=0.1, p=0.1, estimators=("bogus",))
    with pytest.raises(ValueError):
        ExperimentConfig(graph=g_spec, alpha=0.01, beta=0.1, p=0.1, trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(graph=g_spec, alpha=0.01, beta=0.1, p=0.1, mixing="other")
    with pytest.raises(ValueError):
        ExperimentConfig(graph=g_spec, alpha=0.6, beta=0.5, p=0.1, noise_known=True)
    with pytest.raises(ValueError):
        ExperimentConfig(graph={"source": "edge_list", "path": "x.csv"},
                         alpha=0.0, beta=0.0, p=0.1, regenerate_graph=True)


def test_config_from_json_roundtrip(tmp_path):
    spec = {
        "graph": {"source": "generate", "kind": "ztp", "n_v": 40, "mean_degree": 5.0, "seed": 3},
        "alpha": 0.005,
        "beta": 0.1,
        "p": 0.1,
        "outcomes": [10.0, 7.0, 5.0, 1.0],
        "trials": 25,
        "bootstrap_b": 50,
        "master_seed": 9,
        "estimators": ["HT_true", "AS_noisy"],
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(spec))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.trials == 25
    assert cfg.estimators == ("HT_true", "AS_noisy")
    assert cfg.echo()["graph"]["kind"] == "ztp"


def test_resolve_graph_sources(tmp_path):
    spec = {"source": "generate", "kind": "ztp", "n_v": 30, "mean_degree": 4.0, "seed": 2}
    g = resolve_graph(spec)
    assert g.n_v == 30
    assert resolve_graph(spec) == g  # same seed, same graph
    path = tmp_path / "edges.csv"
    path.write_text("node_a,node_b\na,b\nb,c\n")
    g2 = resolve_graph({"source": "edge_list", "path": str(path)})
    assert g2.n_v == 3 and g2.n_edges == 2
    rpath = tmp_path / "rounds.csv"
    rpath.write_text("round,node_a,node_b\n1,a,b\n2,a,b\n1,b,c\n")
    g3 = resolve_graph({"source": "rounds", "path": str(rpath)})
    assert g3.n_edges == 1
    with pytest.raises(ValueError):
        resolve_graph({"source": "nowhere"})


# -- experiment runs ----------------------------------------------------------


def test_noiseless_run_is_unbiased_for_all_estimators(small_graph):
    cfg = ExperimentConfig(
        graph=small_graph,
        alpha=0.0,
        beta=0.0,
        p=0.1,
        trials=2_000,
        bootstrap_b=200,
        master_seed=100,
    )
    summary = run_experiment(cfg)
    assert summary.n_failed == 0
    for row in summary.rows:
        se = row.sd / np.sqrt(summary.n_trials)
        assert abs(row.bias) < 4 * se, (row.estimator, row.level, row.bias, se)
    truths = {r.level: r.truth for r in summary.rows if r.estimator == "HT_true"}
    assert truths == {"c11": 10.0, "c10": 7.0, "c01": 5.0, "c00": 1.0}


def test_run_is_deterministic(small_graph):
    cfg = dict(graph=small_graph, alpha=0.01, beta=0.1, p=0.1,
               trials=60, bootstrap_b=80, master_seed=7)
    a = run_experiment(ExperimentConfig(**cfg))
    b = run_experiment(ExperimentConfig(**cfg))
    assert a.rows == b.rows
    assert a.mme_rule_counts == b.mme_rule_counts


def test_trial_splitting_merges_exactly(small_graph):
    cfg = ExperimentConfig(graph=small_graph, alpha=0.01, beta=0.1, p=0.1,
                           trials=120, master_seed=13)
    table = _resolve_outcomes(cfg, small_graph.n_v)
    full, f_full, c_full, _ = _run_trials(cfg, small_graph, table, 0, 120)
    left, f_left, _, _ = _run_trials(cfg, small_graph, table, 0, 60)
    right, f_right, _, _ = _run_trials(cfg, small_graph, table, 60, 120)
    assert np.array_equal(np.concatenate([left, right]), full, equal_nan=True)
    assert np.array_equal(np.concatenate([f_left, f_right]), f_full)


def test_failed_trials_are_excluded_and_counted(small_graph, monkeypatch):
    calls = {"n": 0}
    import nnc.harness as harness_mod
    real_fit = harness_mod.fit_alpha_beta

    def flaky(stats, **kw):
        calls["n"] += 1
        if calls["n"] == 1:
            raise NoiseFitError("synthetic failure")
        return real_fit(stats, **kw)

    monkeypatch.setattr(harness_mod, "fit_alpha_beta", flaky)
    cfg = ExperimentConfig(graph=small_graph, alpha=0.01, beta=0.1, p=0.1,
                           trials=200, bootstrap_b=50, master_seed=3)
    summary = run_experiment(cfg)
    assert summary.n_failed == 1
    assert summary.noise_fit_convergence_rate == 1.0


def test_too_many_failures_abort_run(small_graph, monkeypatch):
    import nnc.harness as harness_mod

    def always_fail(stats, **kw):
        raise NoiseFitError("synthetic failure")

    monkeypatch.setattr(harness_mod, "fit_alpha_beta", always_fail)
    cfg = ExperimentConfig(graph=small_graph, alpha=0.01, beta=0.1, p=0.1,
                           trials=50, master_seed=3)
    with pytest.raises(ExperimentError):
        run_experiment(cfg)


def test_known_noise_skips_fitting(small_graph):
    cfg = ExperimentConfig(graph=small_graph, alpha=0.01, beta=0.1, p=0.1,
                           noise_known=True, trials=30, bootstrap_b=40, master_seed=5)
    summary = run_experiment(cfg)
    assert summary.noise_fit_convergence_rate is None
    assert summary.n_failed == 0


def test_regenerated_graphs_vary_but_stay_deterministic():
    spec = {"source": "generate", "kind": "ztp", "n_v": 40, "mean_degree": 4.0, "seed": 1}
    cfg = dict(graph=spec, alpha=0.0, beta=0.0, p=0.1, trials=12,
               bootstrap_b=30, master_seed=21, regenerate_graph=True)
    a = run_experiment(ExperimentConfig(**cfg))
    b = run_experiment(ExperimentConfig(**cfg))
    assert a.rows == b.rows


# -- results emission -----------------------------------------------------------


def test_emit_results_files_and_determinism(small_graph, tmp_path):
    cfg = ExperimentConfig(graph=small_graph, alpha=0.01, beta=0.1, p=0.1,
                           trials=40, bootstrap_b=50, master_seed=2)
    summary = run_experiment(cfg)
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    emit_results(summary, out1)
    emit_results(run_experiment(cfg), out2)
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().strip().split("\n")
    assert lines[0].startswith("estimator,level,truth,mean_estimate,bias")
    assert len(lines) == 1 + 4 * 3
    sidecar = json.loads((tmp_path / "r1.json").read_text())
    assert sidecar["config"]["alpha"] == 0.01
    assert sidecar["n_trials"] == 40


def test_emit_results_header_only_for_empty_estimators(small_graph, tmp_path):
    cfg = ExperimentConfig(graph=small_graph, alpha=0.0, beta=0.0, p=0.1,
                           trials=1, bootstrap_b=1, master_seed=0, estimators=())
    summary = run_experiment(cfg)
    out = tmp_path / "empty.csv"
    emit_results(summary, out)
    assert out.read_text().strip() == (
        "estimator,level,truth,mean_estimate,bias,bias_ci_lo,bias_ci_hi,"
        "sd,sd_ci_lo,sd_ci_hi,n_trials,n_failed"
    )

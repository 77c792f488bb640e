"""Scenario generator and scoring tests."""

import numpy as np
import pytest
from scipy.stats import kstest, rankdata

from fungraph import (
    ConfigError,
    EdgeFunction,
    ScenarioConfig,
    TruthGraph,
    generate,
    imtpr_imfpr,
    pair_list,
    read_truth_csv,
    residual_precisions,
    roc_points,
    scenario_manifest,
    truth_graph,
    write_truth_csv,
)


def edge_fn(selected, pairs):
    sel = np.asarray(selected, dtype=bool)
    return EdgeFunction(sel, np.zeros_like(sel, float), np.zeros_like(sel, float), pairs)


class TestGenerate:
    def test_white_noise_case(self):
        # no AR, identity residual covariance: iid standard normals
        config = ScenarioConfig(
            autocorrelation="ar1", n=40, p=4, T=64, seed=1, ar_coeff=0.0,
            e1=(), e2=(), e3=(),
        )
        data, truth = generate(config)
        flat = data.values.ravel()
        assert kstest(flat, "norm").statistic < 0.01
        lag1 = [
            np.corrcoef(data.values[:, j, :-1].ravel(), data.values[:, j, 1:].ravel())[0, 1]
            for j in range(4)
        ]
        assert np.max(np.abs(lag1)) < 0.05
        assert not truth.present.any()

    def test_ar_lag1_autocorrelation(self):
        config = ScenarioConfig(
            autocorrelation="ar1", n=200, p=4, T=128, seed=2, ar_coeff=0.5,
            e1=(), e2=(), e3=(),
        )
        data, _ = generate(config)
        lag1 = np.mean([
            np.corrcoef(data.values[:, j, :-1].ravel(), data.values[:, j, 1:].ravel())[0, 1]
            for j in range(4)
        ])
        assert lag1 == pytest.approx(0.5, abs=0.02)

    def test_changepoint_long_range_structure(self):
        config = ScenarioConfig(
            autocorrelation="changepoint", n=3000, p=3, T=16, seed=3,
            e1=(), e2=(), e3=(), t0=8,
        )
        data, _ = generate(config)
        y = data.values[:, 0, :]
        within = np.corrcoef(y[:, 1], y[:, 6])[0, 1]
        across = np.corrcoef(y[:, 1], y[:, 12])[0, 1]
        far_within = np.corrcoef(y[:, 9], y[:, 14])[0, 1]
        assert within == pytest.approx(0.5, abs=0.05)  # shared X gives cov 1 of var 2
        assert across == pytest.approx(0.0, abs=0.05)
        assert far_within == pytest.approx(0.5, abs=0.05)

    def test_residual_partial_correlations_match_levels(self):
        config = ScenarioConfig(autocorrelation="ar1", seed=4)
        prec = residual_precisions(config)
        truth = truth_graph(config)
        t = 32  # E2 high, E3 moderate
        cov = np.linalg.inv(prec[t])
        rng = np.random.default_rng(5)
        eps = rng.multivariate_normal(np.zeros(10), cov, size=10**5)
        emp_prec = np.linalg.inv(np.cov(eps.T))
        d = np.sqrt(np.diag(emp_prec))
        partial = -emp_prec / np.outer(d, d)
        for i, (j, l) in enumerate(truth.pairs):
            assert partial[j, l] == pytest.approx(truth.levels[t, i], abs=0.02)

    def test_truth_threshold_consistency(self):
        config = ScenarioConfig(autocorrelation="ar1", seed=6)
        truth = truth_graph(config)
        assert np.array_equal(truth.present, np.abs(truth.levels) > config.presence_threshold)

    def test_same_seed_identical(self):
        config = ScenarioConfig(autocorrelation="changepoint", n=5, p=4, T=32, seed=9,
                                e1=((0, 1),), e2=((1, 2),), e3=((2, 3),))
        d1, t1 = generate(config)
        d2, t2 = generate(config)
        assert np.array_equal(d1.values, d2.values)
        assert np.array_equal(t1.present, t2.present)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(autocorrelation="ma")
        with pytest.raises(ConfigError):
            ScenarioConfig(ar_coeff=1.0)
        with pytest.raises(ConfigError):
            ScenarioConfig(e1=((0, 0),))
        with pytest.raises(ConfigError):
            ScenarioConfig(e1=((0, 1),), e2=((1, 0),))  # duplicate edge
        with pytest.raises(ConfigError):
            ScenarioConfig(dynamic=3)

    def test_dynamic2_paths_ramp(self):
        config = ScenarioConfig(dynamic=2, T=100)
        e2, e3 = config.level_paths()
        assert e2[0] == 0.0 and e2[-1] == pytest.approx(0.6)
        assert e3[0] == pytest.approx(0.6) and e3[-1] == 0.0
        assert np.all(np.diff(e2) >= -1e-12) and np.all(np.diff(e3) <= 1e-12)
        assert np.max(e2 + e3) <= 0.6 + 1e-12


class TestMetrics:
    def setup_method(self):
        self.pairs = pair_list(4)
        levels = np.zeros((3, 6))
        levels[:, 0] = 0.5  # edge (0,1) always present
        levels[2, 3] = 0.4  # edge (1,2) present at t=2 only
        self.truth = TruthGraph(levels > 0.05, levels, self.pairs)

    def test_perfect_estimate(self):
        assert imtpr_imfpr(edge_fn(self.truth.present, self.pairs), self.truth) == (1.0, 0.0)

    def test_full_graph(self):
        full = edge_fn(np.ones_like(self.truth.present), self.pairs)
        assert imtpr_imfpr(full, self.truth) == (1.0, 1.0)

    def test_empty_graph(self):
        empty = edge_fn(np.zeros_like(self.truth.present), self.pairs)
        assert imtpr_imfpr(empty, self.truth) == (0.0, 0.0)

    def test_rates_in_unit_interval(self):
        rng = np.random.default_rng(10)
        est = edge_fn(rng.uniform(size=self.truth.present.shape) < 0.3, self.pairs)
        tpr, fpr = imtpr_imfpr(est, self.truth)
        assert 0.0 <= tpr <= 1.0 and 0.0 <= fpr <= 1.0


class TestRoc:
    def setup_method(self):
        self.pairs = pair_list(3)
        levels = np.zeros((4, 3))
        levels[:2, 0] = 0.5
        levels[1:, 2] = 0.3
        self.truth = TruthGraph(levels > 0.05, levels, self.pairs)

    def test_perfect_scores(self):
        scores = np.where(self.truth.present, 2.0, 1.0) + np.random.default_rng(0).uniform(
            0, 0.5, self.truth.present.shape
        )
        points, auc = roc_points(scores, self.truth)
        assert auc == 1.0
        assert np.all(np.diff(points[:, 0]) >= 0) and np.all(np.diff(points[:, 1]) >= 0)

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(1)
        pairs = pair_list(10)
        levels = (rng.uniform(size=(200, len(pairs))) < 0.2) * 0.5
        truth = TruthGraph(levels > 0.05, levels, pairs)
        aucs = [roc_points(rng.uniform(size=levels.shape), truth)[1] for _ in range(20)]
        assert np.mean(aucs) == pytest.approx(0.5, abs=0.01)

    def test_matches_mann_whitney(self):
        # 4 instances, hand-built: AUC equals the rank-statistic value
        pairs = ((0, 1),)
        present = np.array([[True], [False], [True], [False]])
        truth = TruthGraph(present, present * 0.5, pairs)
        scores = np.array([[0.9], [0.8], [0.3], [0.1]])
        _, auc = roc_points(scores, truth)
        flat, labels = scores.ravel(), present.ravel()
        ranks = rankdata(flat)
        n1 = labels.sum()
        n0 = labels.size - n1
        u = ranks[labels].sum() - n1 * (n1 + 1) / 2
        assert auc == pytest.approx(u / (n1 * n0))
        # and with ties in the scores
        scores_tied = np.array([[0.9], [0.5], [0.5], [0.1]])
        _, auc_tied = roc_points(scores_tied, truth)
        ranks = rankdata(scores_tied.ravel())
        u = ranks[labels].sum() - n1 * (n1 + 1) / 2
        assert auc_tied == pytest.approx(u / (n1 * n0))

    def test_endpoints(self):
        points, _ = roc_points(np.random.default_rng(2).uniform(size=self.truth.present.shape), self.truth)
        assert tuple(points[0]) == (0.0, 0.0)
        assert tuple(points[-1]) == (1.0, 1.0)


class TestTruthIO:
    def test_roundtrip(self, tmp_path):
        config = ScenarioConfig(autocorrelation="ar1", p=5, T=16, seed=11,
                                e1=((0, 1),), e2=((2, 3),), e3=((3, 4),))
        truth = truth_graph(config)
        path = tmp_path / "truth.csv"
        write_truth_csv(truth, path)
        back = read_truth_csv(path, 5, 16)
        assert np.array_equal(back.present, truth.present)

    def test_manifest_records_constants(self):
        config = ScenarioConfig(autocorrelation="changepoint", t0=40, T=100)
        manifest = scenario_manifest(config)
        assert manifest["t0"] == 40
        assert manifest["presence_threshold"] == 0.05
        assert manifest["e1"] == [[1, 2], [3, 4], [9, 10]]

import numpy as np
import pytest

from probecast.hypersearch import (
    SearchSpace,
    bayes_opt,
    encode_config,
    gp_posterior,
    make_mlp_objective,
    random_search,
    tpe_search,
)
from probecast.mlp import NNConfig

from oracles import toy_structure_score


SPACE = SearchSpace()


class TestRandomSearch:
    def test_budget_one(self):
        r = random_search(SPACE, 1, toy_structure_score, seed=0)
        assert len(r.history) == 1 and r.best == 0

    def test_determinism(self):
        r1 = random_search(SPACE, 25, toy_structure_score, seed=4)
        r2 = random_search(SPACE, 25, toy_structure_score, seed=4)
        assert r1.history == r2.history

    def test_samples_respect_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            cfg = SPACE.sample(rng)
            assert SPACE.contains(cfg)

    def test_exact_budget_evaluations(self):
        calls = []

        def counting(cfg):
            calls.append(cfg)
            return toy_structure_score(cfg)

        random_search(SPACE, 17, counting, seed=0)
        assert len(calls) == 17


class TestGaussianProcess:
    def test_posterior_interpolates_observations(self):
        rng = np.random.default_rng(7)
        Xs = rng.normal(size=(12, 6))
        ys = np.sin(Xs[:, 0]) + Xs[:, 1] * 0.2
        mu, var = gp_posterior(Xs, ys, Xs, lengthscale=1.0, noise=1e-6)
        rel = np.abs(mu - ys) / np.maximum(np.abs(ys), 1e-9)
        assert rel.max() < 1e-4
        assert var.max() < 1e-3

    def test_posterior_variance_nonnegative(self):
        rng = np.random.default_rng(8)
        Xs = rng.normal(size=(10, 6))
        ys = rng.normal(size=10)
        Xq = rng.normal(size=(50, 6))
        _, var = gp_posterior(Xs, ys, Xq, lengthscale=0.5, noise=1e-6)
        assert (var >= 0).all()


class TestBayesOpt:
    def test_determinism(self):
        r1 = bayes_opt(SPACE, 25, toy_structure_score, seed=3)
        r2 = bayes_opt(SPACE, 25, toy_structure_score, seed=3)
        assert r1.history == r2.history

    def test_budget_exact_and_bounds(self):
        calls = []

        def counting(cfg):
            calls.append(cfg)
            assert SPACE.contains(cfg)
            return toy_structure_score(cfg)

        r = bayes_opt(SPACE, 30, counting, seed=1)
        assert len(calls) == 30 and len(r.history) == 30

    def test_budget_must_exceed_init(self):
        with pytest.raises(ValueError):
            bayes_opt(SPACE, 10, toy_structure_score, seed=0, init_points=10)

    def test_prefix_property(self):
        r30 = bayes_opt(SPACE, 30, toy_structure_score, seed=5)
        r50 = bayes_opt(SPACE, 50, toy_structure_score, seed=5)
        assert r50.history[:30] == r30.history
        assert r50.best_score <= r30.best_score

    def test_survives_divergent_scores(self):
        def sometimes_inf(cfg):
            if cfg.hidden_layers == 2:
                return float("inf")
            return toy_structure_score(cfg)

        r = bayes_opt(SPACE, 20, sometimes_inf, seed=2)
        assert len(r.history) == 20
        assert np.isfinite(r.best_score)


class TestTpeSearch:
    def test_determinism(self):
        r1 = tpe_search(SPACE, 25, toy_structure_score, seed=3)
        r2 = tpe_search(SPACE, 25, toy_structure_score, seed=3)
        assert r1.history == r2.history

    def test_constant_objective_falls_back_to_uniform(self):
        r = tpe_search(SPACE, 20, lambda cfg: 1.0, seed=0)
        assert len(r.history) == 20
        assert all(SPACE.contains(c) for c, _ in r.history)

    def test_budget_exact(self):
        calls = []

        def counting(cfg):
            calls.append(cfg)
            return toy_structure_score(cfg)

        tpe_search(SPACE, 24, counting, seed=1)
        assert len(calls) == 24

    def test_survives_divergent_scores(self):
        def sometimes_inf(cfg):
            if cfg.hidden_layers == 2:
                return float("inf")
            return toy_structure_score(cfg)

        r = tpe_search(SPACE, 20, sometimes_inf, seed=2)
        assert len(r.history) == 20
        assert np.isfinite(r.best_score)

    def test_prefix_property(self):
        r30 = tpe_search(SPACE, 30, toy_structure_score, seed=5)
        r50 = tpe_search(SPACE, 50, toy_structure_score, seed=5)
        assert r50.history[:30] == r30.history
        assert r50.best_score <= r30.best_score


class TestObjective:
    def easy_data(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(1, 9, size=(40, 3))
        return X, np.full(40, 6.0)

    def test_constant_target_scores_tiny(self):
        X, y = self.easy_data()
        objective = make_mlp_objective(X, y, seed=0)
        score = objective(NNConfig.of([4]))
        assert score < 0.01

    def test_same_config_same_seed_same_score(self):
        X, y = self.easy_data()
        objective = make_mlp_objective(X, y, seed=0)
        cfg = NNConfig.of([6, 3])
        assert objective(cfg) == objective(cfg)


def test_record_csv_format():
    r = random_search(SPACE, 5, toy_structure_score, seed=0)
    text = r.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "iteration,layers,neurons_csv,score"
    assert len(lines) == 6

"""Network-structure search: random baseline, Gaussian-process Bayesian
optimization with expected improvement, and a simplified Parzen-estimator
search.

The space is layer count 1-5 by neurons 1-35 per layer. The objective
scores a structure by the mean absolute percentage error of a seeded
training run evaluated on the training set itself (no held-out fold); a
structure whose training diverges scores +inf and the search continues.

The Parzen searcher is a from-scratch simplification -- per-dimension
discrete densities with Laplace smoothing, not a reimplementation of any
library's estimator.
"""

import csv
import io
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateGram, NonFiniteLoss
from .metrics import ape_batch
from .mlp import (
    MAX_LAYERS,
    MAX_NEURONS,
    MIN_LAYERS,
    MIN_NEURONS,
    NNConfig,
    TrainOptions,
    train_mlp,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchSpace:
    min_layers: int = MIN_LAYERS
    max_layers: int = MAX_LAYERS
    min_neurons: int = MIN_NEURONS
    max_neurons: int = MAX_NEURONS

    def sample(self, rng) -> NNConfig:
        layers = int(rng.integers(self.min_layers, self.max_layers + 1))
        neurons = tuple(int(v) for v in
                        rng.integers(self.min_neurons, self.max_neurons + 1, size=layers))
        return NNConfig(hidden_layers=layers, neurons_per_layer=neurons)

    def contains(self, config: NNConfig) -> bool:
        return (self.min_layers <= config.hidden_layers <= self.max_layers and
                all(self.min_neurons <= n <= self.max_neurons
                    for n in config.neurons_per_layer))


@dataclass(frozen=True)
class SearchRecord:
    history: Tuple[Tuple[NNConfig, float], ...]
    best: int
    budget: int

    def __post_init__(self):
        assert len(self.history) <= self.budget
        scores = [s for _, s in self.history]
        assert scores[self.best] == min(scores)

    @property
    def best_config(self) -> NNConfig:
        return self.history[self.best][0]

    @property
    def best_score(self) -> float:
        return self.history[self.best][1]

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["iteration", "layers", "neurons_csv", "score"])
        for i, (cfg, score) in enumerate(self.history):
            w.writerow([i, cfg.hidden_layers,
                        ",".join(str(n) for n in cfg.neurons_per_layer), repr(score)])
        return out.getvalue()


def _finish(history: List[Tuple[NNConfig, float]], budget: int) -> SearchRecord:
    best = int(np.argmin([s for _, s in history]))
    return SearchRecord(history=tuple(history), best=best, budget=budget)


def make_mlp_objective(X, y, seed: int = 0,
                       options: Optional[TrainOptions] = None) -> Callable[[NNConfig], float]:
    """Objective: train with the given structure (seeded) and return the mean
    APE on the same training set."""
    base = options or TrainOptions()

    def objective(config: NNConfig) -> float:
        opts = TrainOptions(
            learning_rate=base.learning_rate, momentum=base.momentum,
            epochs=base.epochs, batch_size=base.batch_size, seed=seed)
        try:
            model = train_mlp(X, y, config, opts)
        except NonFiniteLoss as exc:
            log.warning("structure %s diverged (%s); scored +inf", config.neurons_per_layer, exc)
            return float("inf")
        return float(ape_batch(y, model.predict_batch(X)).mean())

    return objective


def random_search(space: SearchSpace, budget: int, objective, seed: int) -> SearchRecord:
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    rng = np.random.default_rng(seed)
    history = []
    for _ in range(budget):
        cfg = space.sample(rng)
        history.append((cfg, float(objective(cfg))))
    return _finish(history, budget)


# --- Gaussian-process Bayesian optimization ---------------------------------

_GP_BASE_NOISE = 1e-6
_GP_MAX_NOISE = 1e-2
_GP_LENGTHSCALE_GRID = (0.3, 0.5, 1.0, 2.0, 4.0)
_GP_CANDIDATES = 500


def encode_config(config: NNConfig) -> np.ndarray:
    """Fixed-length numeric encoding: layer count then 5 neuron slots,
    unused slots zero."""
    v = np.zeros(1 + MAX_LAYERS)
    v[0] = config.hidden_layers
    for i, n in enumerate(config.neurons_per_layer):
        v[1 + i] = n
    return v


def _sq_dists(A, B) -> np.ndarray:
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def _gp_cholesky(Xs, ys, lengthscale, noise):
    K = np.exp(-_sq_dists(Xs, Xs) / (2.0 * lengthscale ** 2))
    K[np.diag_indices_from(K)] += noise
    L = np.linalg.cholesky(K)
    alpha = np.linalg.solve(L.T, np.linalg.solve(L, ys))
    return L, alpha


def _gp_log_marginal(L, alpha, ys) -> float:
    return float(-0.5 * ys @ alpha - np.log(np.diag(L)).sum()
                 - 0.5 * len(ys) * np.log(2.0 * np.pi))


def gp_posterior(Xs, ys, Xq, lengthscale, noise):
    """Posterior mean and variance at query points for an RBF-covariance GP."""
    L, alpha = _gp_cholesky(Xs, ys, lengthscale, noise)
    Kq = np.exp(-_sq_dists(Xs, Xq) / (2.0 * lengthscale ** 2))
    mu = Kq.T @ alpha
    v = np.linalg.solve(L, Kq)
    var = 1.0 + noise - (v * v).sum(axis=0)
    return mu, np.maximum(var, 0.0)


def _fit_gp(Xs, ys):
    """Pick the length scale by marginal likelihood over a small grid,
    escalating the jitter tenfold when the Gram matrix is degenerate."""
    noise = _GP_BASE_NOISE
    while True:
        best = None
        for ls in _GP_LENGTHSCALE_GRID:
            try:
                L, alpha = _gp_cholesky(Xs, ys, ls, noise)
            except np.linalg.LinAlgError:
                continue
            lml = _gp_log_marginal(L, alpha, ys)
            if best is None or lml > best[0]:
                best = (lml, ls)
        if best is not None:
            return best[1], noise
        noise *= 10.0
        if noise > _GP_MAX_NOISE:
            raise DegenerateGram(
                f"Gram matrix stayed non-positive-definite up to jitter {_GP_MAX_NOISE}")


def expected_improvement(mu, var, best_score) -> np.ndarray:
    sigma = np.sqrt(var)
    ei = np.zeros_like(mu)
    ok = sigma > 0
    gap = best_score - mu[ok]
    z = gap / sigma[ok]
    ei[ok] = sigma[ok] * (z * ndtr(z) + np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi))
    return ei


def bayes_opt(space: SearchSpace, budget: int, objective, seed: int,
              init_points: int = 10) -> SearchRecord:
    """GP-guided search: seed with random structures, then repeatedly propose
    the candidate with the highest expected improvement."""
    if budget <= init_points:
        raise ValueError(f"budget ({budget}) must exceed init_points ({init_points})")
    rng = np.random.default_rng(seed)
    history: List[Tuple[NNConfig, float]] = []
    for _ in range(init_points):
        cfg = space.sample(rng)
        history.append((cfg, float(objective(cfg))))

    while len(history) < budget:
        E = np.array([encode_config(c) for c, _ in history])
        scores = np.array([s for _, s in history])
        finite = np.isfinite(scores)
        if finite.sum() < 2:
            cfg = space.sample(rng)
            history.append((cfg, float(objective(cfg))))
            continue
        Ef, sf = E[finite], scores[finite]

        x_mean, x_std = Ef.mean(axis=0), Ef.std(axis=0)
        x_std[x_std == 0] = 1.0
        y_mean, y_std = sf.mean(), sf.std()
        if y_std == 0:
            y_std = 1.0
        Xs = (Ef - x_mean) / x_std
        ys = (sf - y_mean) / y_std

        lengthscale, noise = _fit_gp(Xs, ys)
        candidates = [space.sample(rng) for _ in range(_GP_CANDIDATES)]
        Q = (np.array([encode_config(c) for c in candidates]) - x_mean) / x_std
        mu, var = gp_posterior(Xs, ys, Q, lengthscale, noise)
        ei = expected_improvement(mu, var, float(ys.min()))
        cfg = candidates[int(np.argmax(ei))]
        history.append((cfg, float(objective(cfg))))
    return _finish(history, budget)


# --- simplified Parzen-estimator search --------------------------------------

_TPE_CANDIDATES = 100


def _discrete_density(values, lo, hi):
    """Laplace-smoothed histogram over the integer domain [lo, hi]."""
    domain = hi - lo + 1
    counts = np.ones(domain)
    for v in values:
        counts[v - lo] += 1.0
    return counts / counts.sum()


def tpe_search(space: SearchSpace, budget: int, objective, seed: int,
               gamma_quantile: float = 0.25, init_points: int = 10) -> SearchRecord:
    """Split history at the gamma quantile into good/bad sets, model each
    dimension with a smoothed discrete density, and propose the candidate
    (drawn from the good model) with the best good/bad density ratio.

    When the split is degenerate (all observed scores effectively equal)
    the iteration falls back to uniform sampling.
    """
    if budget <= init_points:
        raise ValueError(f"budget ({budget}) must exceed init_points ({init_points})")
    rng = np.random.default_rng(seed)
    history: List[Tuple[NNConfig, float]] = []
    for _ in range(init_points):
        cfg = space.sample(rng)
        history.append((cfg, float(objective(cfg))))

    layer_domain = (space.min_layers, space.max_layers)
    neuron_domain = (space.min_neurons, space.max_neurons)

    while len(history) < budget:
        scores = np.array([s for _, s in history])
        finite = np.isfinite(scores)
        threshold = np.quantile(scores[finite], gamma_quantile) if finite.any() else np.inf
        good = [c for (c, s) in history if np.isfinite(s) and s <= threshold]
        bad = [c for (c, s) in history if not (np.isfinite(s) and s <= threshold)]
        if not good or not bad:
            cfg = space.sample(rng)  # degenerate split
            history.append((cfg, float(objective(cfg))))
            continue

        def densities(configs):
            p_layers = _discrete_density([c.hidden_layers for c in configs], *layer_domain)
            p_slots = []
            for s in range(space.max_layers):
                vals = [c.neurons_per_layer[s] for c in configs if c.hidden_layers > s]
                p_slots.append(_discrete_density(vals, *neuron_domain))
            return p_layers, p_slots

        g_layers, g_slots = densities(good)
        b_layers, b_slots = densities(bad)

        def draw() -> NNConfig:
            layers = int(rng.choice(
                np.arange(layer_domain[0], layer_domain[1] + 1), p=g_layers))
            neurons = tuple(int(rng.choice(
                np.arange(neuron_domain[0], neuron_domain[1] + 1), p=g_slots[s]))
                for s in range(layers))
            return NNConfig(hidden_layers=layers, neurons_per_layer=neurons)

        def ratio(cfg: NNConfig) -> float:
            r = (g_layers[cfg.hidden_layers - layer_domain[0]]
                 / b_layers[cfg.hidden_layers - layer_domain[0]])
            for s, n in enumerate(cfg.neurons_per_layer):
                r *= g_slots[s][n - neuron_domain[0]] / b_slots[s][n - neuron_domain[0]]
            return r

        candidates = [draw() for _ in range(_TPE_CANDIDATES)]
        cfg = candidates[int(np.argmax([ratio(c) for c in candidates]))]
        history.append((cfg, float(objective(cfg))))
    return _finish(history, budget)

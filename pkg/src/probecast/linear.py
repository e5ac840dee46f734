"""Degree-2 polynomial execution-time models.

Four trainers over the same feature map (standardize, then expand to the
nine non-constant degree-2 monomials plus an unpenalized intercept):

* ridge        -- closed form, objective ||y - Xw - b||^2 + alpha ||w||^2
* lasso/enet   -- cyclic coordinate descent with soft thresholding on
                  1/(2n) ||y - Xw - b||^2 + alpha (rho ||w||_1 + (1-rho)/2 ||w||^2)
* sgd          -- per-sample stochastic gradient descent on squared loss
                  with an L2 penalty and a constant learning rate

The objective conventions per family follow the toolkit the training
settings were taken from, so the recorded hyperparameter values keep their
original meaning.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .accel import jit
from .errors import InsufficientData, NonFiniteInput
from .features import Standardizer, fit_standardizer, poly2_expand, poly2_expand_batch

log = logging.getLogger(__name__)

TRAINERS = ("elasticnet", "lasso", "ridge", "sgd")

#: weights cover the 9 non-constant monomials; the constant is the intercept
N_WEIGHTS = 9


@dataclass(frozen=True)
class LinearHyperparameters:
    alpha: float = 1.0
    l1_ratio: float = 0.5
    tolerance: float = 0.001
    max_iterations: int = 10_000
    eta: float = 0.01      # SGD only
    epsilon: float = 0.1   # recorded with the SGD settings; unused by squared loss


def default_hyperparameters(trainer: str) -> LinearHyperparameters:
    if trainer == "sgd":
        return LinearHyperparameters(alpha=0.0001, l1_ratio=0.15)
    l1_ratio = {"elasticnet": 0.5, "lasso": 1.0, "ridge": 0.0}[trainer]
    return LinearHyperparameters(alpha=1.0, l1_ratio=l1_ratio)


@dataclass(frozen=True)
class LinearModel:
    trainer: str
    weights: Tuple[float, ...]
    intercept: float
    standardizer: Standardizer
    hyperparameters: LinearHyperparameters
    converged: bool = True

    def __post_init__(self):
        assert len(self.weights) == N_WEIGHTS

    def predict_one(self, x) -> float:
        phi = poly2_expand(self.standardizer.apply(x))
        return float(phi[1:] @ np.asarray(self.weights) + self.intercept)

    def predict_batch(self, X) -> np.ndarray:
        phi = poly2_expand_batch(self.standardizer.apply_batch(X))
        return phi[:, 1:] @ np.asarray(self.weights) + self.intercept


@jit()
def _cd_fit(Ft, y, alpha_l1, alpha_l2, tol, max_iterations):
    """Cyclic coordinate descent on centered features Ft (p, n) / targets y.

    Stops when the largest coefficient change in a sweep drops below tol.
    """
    p, n = Ft.shape
    w = np.zeros(p)
    r = y.copy()
    col_sq = np.empty(p)
    for j in range(p):
        col_sq[j] = np.dot(Ft[j], Ft[j]) / n
    it = 0
    max_delta = np.inf
    while it < max_iterations and max_delta >= tol:
        max_delta = 0.0
        for j in range(p):
            w_old = w[j]
            if w_old != 0.0:
                r += Ft[j] * w_old
            rho = np.dot(Ft[j], r) / n
            mag = abs(rho) - alpha_l1
            if mag <= 0.0 or col_sq[j] == 0.0:
                w_new = 0.0
            else:
                w_new = np.sign(rho) * mag / (col_sq[j] + alpha_l2)
            if w_new != 0.0:
                r -= Ft[j] * w_new
            w[j] = w_new
            delta = abs(w_new - w_old)
            if delta > max_delta:
                max_delta = delta
        it += 1
    return w, it, max_delta < tol


@jit()
def _sgd_epoch(Ft, y, w, intercept, order, eta, alpha):
    """One shuffled pass of per-sample updates; returns the new intercept."""
    p, n = Ft.shape
    for k in range(n):
        i = order[k]
        pred = intercept
        for j in range(p):
            pred += w[j] * Ft[j, i]
        err = pred - y[i]
        for j in range(p):
            w[j] -= eta * (err * Ft[j, i] + alpha * w[j])
        intercept -= eta * err
    return intercept


def _validate_training_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 3 or len(X) != len(y):
        raise ValueError(f"need matching (n, 3) inputs and (n,) targets, got {X.shape} / {y.shape}")
    if len(y) < 10:
        raise InsufficientData(f"need at least 10 samples, got {len(y)}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("training data contains NaN or infinity")
    if not (y > 0).all():
        raise ValueError("targets must be positive execution times")
    return X, y


def train_linear(trainer: str, X, y,
                 hyperparameters: Optional[LinearHyperparameters] = None,
                 seed: int = 0) -> LinearModel:
    """Fit one of the four degree-2 polynomial trainers."""
    if trainer not in TRAINERS:
        raise ValueError(f"unknown trainer {trainer!r}; expected one of {TRAINERS}")
    X, y = _validate_training_data(X, y)
    hp = hyperparameters or default_hyperparameters(trainer)

    standardizer = fit_standardizer(X)
    F = poly2_expand_batch(standardizer.apply_batch(X))[:, 1:]
    f_means = F.mean(axis=0)
    y_mean = y.mean()
    Fc = F - f_means
    yc = y - y_mean

    converged = True
    if trainer == "ridge":
        A = Fc.T @ Fc + hp.alpha * np.eye(N_WEIGHTS)
        w = np.linalg.solve(A, Fc.T @ yc)
    elif trainer in ("lasso", "elasticnet"):
        l1 = hp.alpha * hp.l1_ratio
        l2 = hp.alpha * (1.0 - hp.l1_ratio)
        Ft = np.ascontiguousarray(Fc.T)
        w, iters, converged = _cd_fit(Ft, yc, l1, l2, hp.tolerance, hp.max_iterations)
        if not converged:
            log.warning("%s coordinate descent hit max_iterations=%d", trainer, hp.max_iterations)
    else:  # sgd
        rng = np.random.default_rng(seed)
        Ft = np.ascontiguousarray(Fc.T)
        w = np.zeros(N_WEIGHTS)
        intercept = 0.0
        converged = False
        for _ in range(hp.max_iterations):
            w_before = w.copy()
            order = rng.permutation(len(yc))
            intercept = _sgd_epoch(Ft, yc, w, intercept, order, hp.eta, hp.alpha)
            if not np.isfinite(w).all():
                raise NonFiniteInput("SGD diverged to non-finite weights")
            if np.max(np.abs(w - w_before)) < hp.tolerance:
                converged = True
                break
        model_intercept = y_mean + intercept - float(f_means @ w)
        return LinearModel(
            trainer=trainer, weights=tuple(float(v) for v in w),
            intercept=model_intercept, standardizer=standardizer,
            hyperparameters=hp, converged=converged)

    intercept = y_mean - float(f_means @ w)
    return LinearModel(
        trainer=trainer, weights=tuple(float(v) for v in w), intercept=intercept,
        standardizer=standardizer, hyperparameters=hp, converged=bool(converged))

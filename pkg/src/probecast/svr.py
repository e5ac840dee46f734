"""Epsilon-insensitive support vector regression with an RBF kernel.

The dual is solved in the single-coefficient form beta_i = alpha_i -
alpha_i* (so |beta_i| <= C and sum(beta) = 0):

    maximize  -1/2 beta' K beta + y' beta - epsilon * sum |beta_i|

by SMO-style pairwise updates: each step picks the maximal-violating pair
and solves the one-dimensional subproblem exactly (it is piecewise
quadratic with breakpoints where either coefficient crosses zero).
Prediction is sum_i beta_i * K(x, l_i) + b over the retained support
vectors.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .accel import jit
from .errors import InsufficientData, NonFiniteInput
from .features import Standardizer, fit_standardizer

log = logging.getLogger(__name__)

SUPPORT_CUTOFF = 1e-8


def rbf_kernel(x, l, gamma: float) -> float:
    """exp(-gamma ||x - l||^2); 1 at zero distance, 1 everywhere for gamma 0."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    d = np.asarray(x, dtype=np.float64) - np.asarray(l, dtype=np.float64)
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_matrix(A, B, gamma: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass(frozen=True)
class SvrModel:
    support_inputs: np.ndarray       # (m, 3), standardized
    dual_coefficients: np.ndarray    # (m,)
    bias: float
    gamma: float
    C: float
    epsilon: float
    standardizer: Standardizer
    converged: bool = True
    passes: int = 0

    def predict_one(self, x) -> float:
        z = self.standardizer.apply(x)
        if len(self.dual_coefficients) == 0:
            return float(self.bias)
        k = rbf_matrix(z[None, :], self.support_inputs, self.gamma)[0]
        return float(k @ self.dual_coefficients + self.bias)

    def predict_batch(self, X) -> np.ndarray:
        Z = self.standardizer.apply_batch(X)
        if len(self.dual_coefficients) == 0:
            return np.full(len(Z), self.bias)
        K = rbf_matrix(Z, self.support_inputs, self.gamma)
        return K @ self.dual_coefficients + self.bias


@jit()
def _smo_solve(K, y, C, eps, tol, max_passes):
    """Maximal-violating-pair SMO on the beta-form dual.

    Returns (beta, passes, converged); converged means the largest KKT
    violation dropped below tol.
    """
    n = y.shape[0]
    beta = np.zeros(n)
    Kbeta = np.zeros(n)
    passes = 0
    converged = False
    while passes < max_passes:
        best_up = -np.inf
        best_dn = -np.inf
        i = -1
        j = -1
        for k in range(n):
            Fk = y[k] - Kbeta[k]
            if beta[k] < C:
                g = Fk - eps if beta[k] >= 0.0 else Fk + eps
                if g > best_up:
                    best_up = g
                    i = k
            if beta[k] > -C:
                g = -Fk + eps if beta[k] > 0.0 else -Fk - eps
                if g > best_dn:
                    best_dn = g
                    j = k
        if j == i:
            best_dn = -np.inf
            j = -1
            for k in range(n):
                if k == i or beta[k] <= -C:
                    continue
                Fk = y[k] - Kbeta[k]
                g = -Fk + eps if beta[k] > 0.0 else -Fk - eps
                if g > best_dn:
                    best_dn = g
                    j = k
        if i < 0 or j < 0 or best_up + best_dn < tol:
            converged = best_up + best_dn < tol
            break

        bi = beta[i]
        bj = beta[j]
        Fi = y[i] - Kbeta[i]
        Fj = y[j] - Kbeta[j]
        slope = Fi - Fj
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        t_max = min(C - bi, bj + C)

        # candidate steps: interval ends, sign-change breakpoints, and the
        # per-segment stationary points of the piecewise quadratic
        cand = np.empty(8)
        n_cand = 0
        cand[n_cand] = t_max
        n_cand += 1
        if 0.0 < -bi < t_max:
            cand[n_cand] = -bi
            n_cand += 1
        if 0.0 < bj < t_max:
            cand[n_cand] = bj
            n_cand += 1
        if eta > 0.0:
            bounds = np.empty(4)
            bounds[0] = 0.0
            bounds[1] = t_max
            nb = 2
            if 0.0 < -bi < t_max:
                bounds[nb] = -bi
                nb += 1
            if 0.0 < bj < t_max:
                bounds[nb] = bj
                nb += 1
            bounds[:nb] = np.sort(bounds[:nb])
            for s in range(nb - 1):
                lo = bounds[s]
                hi = bounds[s + 1]
                if hi - lo <= 0.0:
                    continue
                mid = 0.5 * (lo + hi)
                s1 = 1.0 if bi + mid >= 0.0 else -1.0
                s2 = 1.0 if bj - mid >= 0.0 else -1.0
                t_star = (slope - eps * (s1 - s2)) / eta
                if t_star < lo:
                    t_star = lo
                elif t_star > hi:
                    t_star = hi
                cand[n_cand] = t_star
                n_cand += 1

        best_t = 0.0
        best_gain = 0.0
        for s in range(n_cand):
            t = cand[s]
            gain = (t * slope - 0.5 * eta * t * t
                    - eps * (abs(bi + t) - abs(bi) + abs(bj - t) - abs(bj)))
            if gain > best_gain:
                best_gain = gain
                best_t = t
        if best_t <= 0.0 or best_gain <= 1e-15:
            break  # numerically stalled; converged stays False

        beta[i] = bi + best_t
        beta[j] = bj - best_t
        for k in range(n):
            Kbeta[k] += best_t * (K[k, i] - K[k, j])
        passes += 1
    return beta, passes, converged


def _bias(beta, F, C, eps):
    """Bias from the KKT interval: free SVs pin it, otherwise take the
    midpoint of the feasible [lower, upper] range."""
    free = (np.abs(beta) > SUPPORT_CUTOFF) & (np.abs(beta) < C * (1 - 1e-9))
    if free.any():
        return float(np.mean(F[free] - eps * np.sign(beta[free])))
    lower = -np.inf
    upper = np.inf
    for k in range(len(beta)):
        if abs(beta[k]) <= SUPPORT_CUTOFF:
            lower = max(lower, F[k] - eps)
            upper = min(upper, F[k] + eps)
        elif beta[k] >= C * (1 - 1e-9):
            upper = min(upper, F[k] - eps)
        elif beta[k] <= -C * (1 - 1e-9):
            lower = max(lower, F[k] + eps)
    if not np.isfinite(lower):
        lower = upper
    if not np.isfinite(upper):
        upper = lower
    return float(0.5 * (lower + upper))


def train_svr(X, y, C: float = 1000.0, epsilon: float = 0.1,
              gamma: Optional[float] = None, tol: float = 1e-3,
              max_passes: int = 10_000) -> SvrModel:
    """Fit epsilon-SVR; gamma defaults to 1 / (3 * variance of the
    standardized inputs), i.e. 1/3 in the standardized space."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(X) != len(y):
        raise ValueError("inputs and targets must have equal length")
    if len(y) < 10:
        raise InsufficientData(f"need at least 10 samples, got {len(y)}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("training data contains NaN or infinity")

    standardizer = fit_standardizer(X)
    Z = standardizer.apply_batch(X)
    if gamma is None:
        var = float(Z.var())
        gamma = 1.0 / (3.0 * var) if var > 0 else 1.0 / 3.0

    K = rbf_matrix(Z, Z, gamma)
    beta, passes, converged = _smo_solve(
        K, y, float(C), float(epsilon), float(tol), int(max_passes))
    if not converged:
        log.warning("SMO stopped after %d passes without meeting tol=%g", passes, tol)
    F = y - K @ beta
    bias = _bias(beta, F, C, epsilon)

    keep = np.abs(beta) > SUPPORT_CUTOFF
    return SvrModel(
        support_inputs=Z[keep].copy(),
        dual_coefficients=beta[keep].copy(),
        bias=bias, gamma=float(gamma), C=float(C), epsilon=float(epsilon),
        standardizer=standardizer, converged=bool(converged), passes=int(passes))

"""Feature engineering shared by the model families.

Probe counts span roughly 1e6..1e10, so every model standardizes its inputs
before fitting; the polynomial models then expand to degree-2 monomials in
the fixed order [1, a, b, c, a^2, ab, ac, b^2, bc, c^2] (serialized models
depend on this order).
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import EmptyInput

log = logging.getLogger(__name__)

#: names of the degree-2 monomials, in serialization order
POLY2_NAMES = ("1", "a", "b", "c", "a2", "ab", "ac", "b2", "bc", "c2")


def poly2_expand(x) -> np.ndarray:
    """Degree-2 monomials of a 3-vector, constant term first."""
    a, b, c = (float(v) for v in x)
    return np.array([1.0, a, b, c, a * a, a * b, a * c, b * b, b * c, c * c])


def poly2_expand_batch(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    a, b, c = X[:, 0], X[:, 1], X[:, 2]
    return np.column_stack([
        np.ones(len(X)), a, b, c, a * a, a * b, a * c, b * b, b * c, c * c])


@dataclass(frozen=True)
class Standardizer:
    means: Tuple[float, float, float]
    stds: Tuple[float, float, float]
    degenerate_dims: Tuple[int, ...] = ()

    def apply(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.means) / self.stds

    def apply_batch(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.means) / self.stds

    def invert(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.stds + self.means


def fit_standardizer(X) -> Standardizer:
    """Per-dimension mean/std (population) over the training inputs.

    A zero-variance dimension gets std 1 so it maps to exactly 0, and is
    recorded (and logged) as degenerate.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] != 3:
        raise EmptyInput(f"need a non-empty (n, 3) input matrix, got shape {X.shape}")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    degenerate = tuple(int(i) for i in np.flatnonzero(stds == 0.0))
    if degenerate:
        log.warning("zero-variance input dimension(s) %s; std forced to 1", degenerate)
        stds = stds.copy()
        stds[list(degenerate)] = 1.0
    return Standardizer(
        means=tuple(float(m) for m in means),
        stds=tuple(float(s) for s in stds),
        degenerate_dims=degenerate)

"""Prediction-error statistics: mean, 95th percentile and standard deviation
of absolute percentage errors, reported as fractions."""

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import EmptyInput, ZeroMeasured


@dataclass(frozen=True)
class ErrorSummary:
    mean: float
    p95: float
    std: float
    count: int


def ape(measured: float, predicted: float) -> float:
    """Absolute percentage error |measured - predicted| / measured."""
    if not measured > 0:
        raise ZeroMeasured(f"measured time must be > 0, got {measured}")
    return abs(measured - predicted) / measured


def ape_batch(measured, predicted) -> np.ndarray:
    measured = np.asarray(measured, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if not (measured > 0).all():
        raise ZeroMeasured("measured times must all be > 0")
    return np.abs(measured - predicted) / measured


def summarize(errors: Sequence[float]) -> ErrorSummary:
    """mean = arithmetic mean, p95 = nearest-rank percentile (an element of
    the input), std = population standard deviation."""
    errors = np.asarray(list(errors), dtype=np.float64)
    if errors.size == 0:
        raise EmptyInput("cannot summarize an empty error list")
    # stats are computed on the sorted values so the result is exactly
    # permutation-invariant (float summation order matters otherwise)
    ordered = np.sort(errors)
    rank = math.ceil(0.95 * errors.size) - 1
    std = 0.0 if ordered[0] == ordered[-1] else float(ordered.std())
    return ErrorSummary(
        mean=float(ordered.mean()),
        p95=float(ordered[rank]),
        std=std,
        count=int(errors.size))


REPORT_HEADER = "model,mean,p95,std,count"


def report_csv(rows: Iterable[Tuple[str, ErrorSummary]]) -> str:
    """Per-model CSV report, one line per (name, summary) pair."""
    lines: List[str] = [REPORT_HEADER]
    for name, s in rows:
        lines.append(f"{name},{s.mean!r},{s.p95!r},{s.std!r},{s.count}")
    return "\n".join(lines) + "\n"

"""CSV-backed sample store and the interleaved 4-of-5 train/test split.

File format (UTF-8, one sample per row, newline-terminated):

    taken_at_unix_s,window_s,c_cpu,c_mem,c_disk,t_app_s

Counts are unsigned decimal integers. Seconds are written with at least six
fractional digits using the shortest representation that round-trips the
float64 exactly, so save -> load is lossless bit for bit.
"""

import os
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import IoFailure, ParseFailure
from .profiler import ContentionVector, Sample

HEADER = "taken_at_unix_s,window_s,c_cpu,c_mem,c_disk,t_app_s"


@dataclass(frozen=True)
class Dataset:
    samples: Tuple[Sample, ...]

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]


@dataclass(frozen=True)
class SplitResult:
    train_indices: Tuple[int, ...]
    test_indices: Tuple[int, ...]


def format_seconds(x: float) -> str:
    """Shortest exact decimal representation, padded to >= 6 fractional digits."""
    s = repr(float(x))
    if "e" in s or "E" in s:
        s = f"{float(x):.17f}"
    if "." not in s:
        s += ".0"
    whole, frac = s.split(".")
    return f"{whole}.{frac.ljust(6, '0')}"


def _sample_row(sample: Sample) -> str:
    v = sample.contention
    return ",".join([
        format_seconds(sample.taken_at),
        format_seconds(v.window),
        str(int(v.c_cpu)),
        str(int(v.c_mem)),
        str(int(v.c_disk)),
        format_seconds(sample.t_app),
    ])


def save(dataset: Dataset, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(HEADER + "\n")
            for sample in dataset:
                f.write(_sample_row(sample) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def append_sample(path, sample: Sample) -> None:
    """Append one sample, writing the header first if the file is new."""
    new = not (os.path.exists(path) and os.path.getsize(path) > 0)
    with open(path, "a", encoding="utf-8", newline="") as f:
        if new:
            f.write(HEADER + "\n")
        f.write(_sample_row(sample) + "\n")
        f.flush()
        os.fsync(f.fileno())


def _parse_row(line: str, row: int) -> Sample:
    parts = line.split(",")
    if len(parts) != 6:
        raise ParseFailure(f"expected 6 fields, got {len(parts)}", row=row)
    try:
        taken_at = float(parts[0])
        window = float(parts[1])
        counts = [int(p) for p in parts[2:5]]
        t_app = float(parts[5])
    except ValueError as exc:
        raise ParseFailure(str(exc), row=row) from exc
    if any(c < 0 for c in counts):
        raise ParseFailure("negative probe count", row=row)
    if not (window > 0):
        raise ParseFailure(f"window must be > 0, got {window}", row=row)
    if not (t_app > 0):
        raise ParseFailure(f"t_app must be > 0, got {t_app}", row=row)
    vector = ContentionVector(
        c_cpu=counts[0], c_mem=counts[1], c_disk=counts[2],
        window=window, taken_at=taken_at)
    return Sample(contention=vector, t_app=t_app, taken_at=taken_at)


def load(path) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != HEADER:
        raise ParseFailure(f"missing or wrong header (expected {HEADER!r})", row=1)
    samples = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        samples.append(_parse_row(line, row=i))
    return Dataset(tuple(samples))


def split_4of5(n_or_dataset) -> SplitResult:
    """For every 5 consecutive samples the first 4 train and the 5th tests;
    an incomplete trailing group goes entirely to train."""
    n = n_or_dataset if isinstance(n_or_dataset, int) else len(n_or_dataset)
    last_complete = 5 * (n // 5)
    test = tuple(i for i in range(last_complete) if i % 5 == 4)
    test_set = set(test)
    train = tuple(i for i in range(n) if i not in test_set)
    return SplitResult(train_indices=train, test_indices=test)


def as_arrays(dataset: Dataset, indices: Sequence[int] = None):
    """Contention matrix (n, 3) and target vector (n,) as float64."""
    samples: Iterable[Sample] = dataset
    if indices is not None:
        samples = [dataset[i] for i in indices]
    X = np.array([s.contention.as_tuple() for s in samples], dtype=np.float64)
    y = np.array([s.t_app for s in samples], dtype=np.float64)
    if X.size == 0:
        X = X.reshape(0, 3)
    return X, y


def from_arrays(X, y, window: float = 3.0, t0: float = 1_600_000_000.0,
                spacing: float = 10.0) -> Dataset:
    """Build a dataset from raw arrays with synthetic increasing timestamps."""
    samples: List[Sample] = []
    for i in range(len(y)):
        taken = t0 + i * spacing
        vector = ContentionVector(
            c_cpu=int(X[i, 0]), c_mem=int(X[i, 1]), c_disk=int(X[i, 2]),
            window=window, taken_at=taken)
        samples.append(Sample(contention=vector, t_app=float(y[i]), taken_at=taken))
    return Dataset(tuple(samples))

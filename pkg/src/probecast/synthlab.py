"""Desk-scale stand-ins for a multi-tenant cloud.

Three pieces:

* a ground-truth dataset generator whose target function is known exactly,
  so model recovery is testable (a degree-2 polynomial oracle the linear
  trainers can match, plus an exponential-of-linear-form variant they
  cannot);
* background load injectors that create real CPU / memory-bandwidth /
  disk contention in place of interfering neighbor VMs;
* a contention-sensitive target kernel standing in for the measured
  application, also exposed as a CLI subcommand so campaigns can launch it
  like any user program.
"""

import logging
import mmap
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .dataset import Dataset, from_arrays
from .errors import (
    AllocationFailure,
    InvalidWorkUnits,
    NonPositiveTarget,
    SpawnFailure,
)
from .features import poly2_expand
from .probes import MIB, GIB, ensure_probe_file, open_direct

log = logging.getLogger(__name__)

FORMS = ("poly2", "exp_linear")


@dataclass(frozen=True)
class SynthSpec:
    """Ground-truth function over range-standardized counters plus sampling
    parameters. Counters are drawn uniformly per dimension and standardized
    with the range's own moments (midpoint, width/sqrt(12)), so the true
    coefficients live in a known, reproducible basis."""
    form: str
    coefficients: Tuple[float, ...]
    noise_sigma: float
    n: int
    counter_ranges: Tuple[Tuple[float, float], ...]
    seed: int = 0
    window: float = 3.0

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        expected = 10 if self.form == "poly2" else 4
        if len(self.coefficients) != expected:
            raise ValueError(
                f"{self.form} needs {expected} coefficients, got {len(self.coefficients)}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if len(self.counter_ranges) != 3 or any(hi <= lo for lo, hi in self.counter_ranges):
            raise ValueError("counter_ranges must be three (lo, hi) pairs with lo < hi")

    def standardize(self, counters) -> np.ndarray:
        c = np.asarray(counters, dtype=np.float64)
        mids = np.array([(lo + hi) / 2.0 for lo, hi in self.counter_ranges])
        scales = np.array([(hi - lo) / np.sqrt(12.0) for lo, hi in self.counter_ranges])
        return (c - mids) / scales

    def ground_truth(self, counters) -> float:
        """True execution seconds for raw counter values."""
        z = self.standardize(counters)
        w = np.asarray(self.coefficients)
        if self.form == "poly2":
            return float(poly2_expand(z) @ w)
        return float(np.exp(w[0] + w[1] * z[0] + w[2] * z[1] + w[3] * z[2]))


def default_poly2_spec(n: int = 1000, noise_sigma: float = 0.01, seed: int = 7) -> SynthSpec:
    return SynthSpec(
        form="poly2",
        coefficients=(120.0, -25.0, -15.0, -8.0, 6.0, 3.0, 2.0, 4.0, 1.5, 2.5),
        noise_sigma=noise_sigma, n=n,
        counter_ranges=((2e8, 3e9), (1e7, 4e8), (5e3, 3e5)), seed=seed)


def default_exp_spec(n: int = 1000, noise_sigma: float = 0.01, seed: int = 11) -> SynthSpec:
    return SynthSpec(
        form="exp_linear",
        coefficients=(3.0, -0.5, -0.4, -0.3),
        noise_sigma=noise_sigma, n=n,
        counter_ranges=((2e8, 3e9), (1e7, 4e8), (5e3, 3e5)), seed=seed)


def gen_synth_dataset(spec: SynthSpec) -> Dataset:
    """Draw counters, apply the ground truth plus multiplicative noise,
    redrawing (capped at 100n) any point whose target is not positive."""
    rng = np.random.default_rng(spec.seed)
    lows = np.array([lo for lo, _ in spec.counter_ranges])
    highs = np.array([hi for _, hi in spec.counter_ranges])
    X = np.empty((spec.n, 3), dtype=np.float64)
    y = np.empty(spec.n, dtype=np.float64)
    redraws = 0
    for i in range(spec.n):
        while True:
            counters = np.floor(rng.uniform(lows, highs))
            t = spec.ground_truth(counters) * (1.0 + rng.normal(0.0, spec.noise_sigma))
            if t > 0:
                break
            redraws += 1
            if redraws > 100 * spec.n:
                raise NonPositiveTarget(
                    f"ground truth kept producing t <= 0 after {redraws} redraws")
        X[i] = counters
        y[i] = t
    return from_arrays(X, y, window=spec.window)


# --- load injectors ----------------------------------------------------------

LOAD_KINDS = ("cpu_hog", "mem_stream", "disk_read")

INJECTOR_MEM_BYTES = 1 * GIB       # private array per MemStream worker
INJECTOR_MEM_STRIDE = 128
INJECTOR_DISK_FILE_BYTES = 128 * MIB
INJECTOR_DISK_PAGE = 4096


@dataclass(frozen=True)
class LoadSpec:
    kind: str
    intensity: int = 1                    # worker count
    duration: Optional[float] = None      # None = run until stopped

    def __post_init__(self):
        if self.kind not in LOAD_KINDS:
            raise ValueError(f"kind must be one of {LOAD_KINDS}, got {self.kind!r}")
        if self.intensity < 1:
            raise ValueError(f"intensity must be >= 1, got {self.intensity}")
        if self.duration is not None and self.duration <= 0:
            raise ValueError(f"duration must be > 0 or None, got {self.duration}")


class LoadHandle:
    """Owns the injector workers; stop() is idempotent and reclaims every
    resource (threads, arrays, probe file)."""

    def __init__(self, spec: LoadSpec, stop_event, threads, arrays, file_path):
        self.spec = spec
        self._stop = stop_event
        self._threads = threads
        self._arrays = arrays
        self._file_path = file_path
        self._stopped = False

    def stop(self) -> None:
        if self._stopped:
            return
        self._stopped = True
        self._stop.set()
        for th in self._threads:
            th.join()
        self._threads = []
        self._arrays = []
        if self._file_path is not None:
            try:
                os.unlink(self._file_path)
            except OSError:
                pass
            self._file_path = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()
        return False


def start_load(spec: LoadSpec) -> LoadHandle:
    """Spawn background contention workers for the given resource."""
    kernels.warmup()
    stop = threading.Event()
    deadline = None if spec.duration is None else time.perf_counter() + spec.duration

    def should_run():
        if stop.is_set():
            return False
        return deadline is None or time.perf_counter() < deadline

    arrays = []
    file_path = None
    workers = []

    if spec.kind == "cpu_hog":
        def make(idx):
            state = kernels.new_cpu_state(seed=1234 + idx)

            def run():
                while should_run():
                    kernels.cpu_chunk(state, kernels.CPU_CHECK_EVERY)
            return run

        workers = [make(i) for i in range(spec.intensity)]

    elif spec.kind == "mem_stream":
        try:
            arrays = [np.zeros(INJECTOR_MEM_BYTES, dtype=np.uint8)
                      for _ in range(spec.intensity)]
        except MemoryError as exc:
            raise SpawnFailure(
                f"cannot allocate {spec.intensity} x {INJECTOR_MEM_BYTES} B") from exc
        for arr in arrays:
            arr[::mmap.PAGESIZE] = 1

        def make(arr):
            def run():
                off = 0
                while should_run():
                    off, _, _ = kernels.mem_chunk(
                        arr, off, 0, len(arr), INJECTOR_MEM_STRIDE,
                        kernels.MEM_CHECK_EVERY)
            return run

        workers = [make(arr) for arr in arrays]

    else:  # disk_read
        fd_, file_path = tempfile.mkstemp(prefix="probecast_inject_", suffix=".bin")
        os.close(fd_)
        ensure_probe_file(file_path, INJECTOR_DISK_FILE_BYTES, seed=99)
        n_pages = INJECTOR_DISK_FILE_BYTES // INJECTOR_DISK_PAGE

        def make(idx):
            start_page = (idx * n_pages) // spec.intensity

            def run():
                fd = open_direct(file_path)
                buf = mmap.mmap(-1, INJECTOR_DISK_PAGE)
                p = start_page
                try:
                    while should_run():
                        os.preadv(fd, [buf], p * INJECTOR_DISK_PAGE)
                        p += 1
                        if p >= n_pages:
                            p = 0
                finally:
                    buf.close()
                    os.close(fd)
            return run

        workers = [make(i) for i in range(spec.intensity)]

    threads = []
    try:
        for i, fn in enumerate(workers):
            th = threading.Thread(target=fn, name=f"probecast-load-{spec.kind}-{i}", daemon=True)
            th.start()
            threads.append(th)
    except RuntimeError as exc:
        stop.set()
        for th in threads:
            th.join()
        raise SpawnFailure(str(exc)) from exc

    return LoadHandle(spec, stop, threads, arrays, file_path)


def stop_load(handle: LoadHandle) -> None:
    handle.stop()


# --- contention-sensitive target kernel --------------------------------------

KERNEL_ARRAY_BYTES = 512 * MIB
KERNEL_CPU_OPS_PER_UNIT = 60_000_000
KERNEL_IO_BYTES_PER_UNIT = 1 * MIB
KERNEL_IO_PAGE = 4096
KERNEL_FILE_BYTES = 64 * MIB

_kernel_array_cache: dict = {}


def run_target_kernel(work_units: int, array_bytes: int = KERNEL_ARRAY_BYTES,
                      path: Optional[str] = None) -> float:
    """Fixed mixed work per unit (register arithmetic, one strided pass over
    a large array, a small direct-I/O read); returns the elapsed seconds of
    the work loop, which grows under injected contention."""
    if work_units < 1:
        raise InvalidWorkUnits(f"work_units must be >= 1, got {work_units}")
    arr = _kernel_array_cache.get(array_bytes)
    if arr is None:
        try:
            arr = np.zeros(array_bytes, dtype=np.uint8)
        except MemoryError as exc:
            raise AllocationFailure(f"cannot allocate {array_bytes} B work array") from exc
        arr[::mmap.PAGESIZE] = 1
        _kernel_array_cache.clear()
        _kernel_array_cache[array_bytes] = arr
    if path is None:
        path = os.path.join(tempfile.gettempdir(), "probecast_kernel.bin")
    ensure_probe_file(path, KERNEL_FILE_BYTES, seed=5)

    state = kernels.new_cpu_state(seed=424242)
    stride = 128
    accesses_per_pass = array_bytes // stride
    io_pages = KERNEL_IO_BYTES_PER_UNIT // KERNEL_IO_PAGE
    n_file_pages = KERNEL_FILE_BYTES // KERNEL_IO_PAGE

    kernels.warmup()
    fd = open_direct(path)
    buf = mmap.mmap(-1, KERNEL_IO_PAGE)
    page = 0
    off = 0
    t0 = time.perf_counter()
    try:
        for _ in range(work_units):
            kernels.cpu_chunk(state, KERNEL_CPU_OPS_PER_UNIT)
            off, _, _ = kernels.mem_chunk(arr, off, 0, array_bytes, stride, accesses_per_pass)
            for _ in range(io_pages):
                os.preadv(fd, [buf], page * KERNEL_IO_PAGE)
                page += 1
                if page >= n_file_pages:
                    page = 0
    finally:
        buf.close()
        os.close(fd)
    return time.perf_counter() - t0

"""Contention micro-benchmarks for CPU, memory bandwidth and disk I/O.

Each probe stresses one resource with worker threads for a fixed wall-clock
window and reports how many operations completed; a lower count means more
contention from whatever else shares the hardware. Workers keep per-worker
local counters that are summed after the deadline (a shared counter would
itself be a point of contention) and check the deadline at fixed chunk
boundaries: every 2^16 increments (CPU), every 2^12 accesses (memory), and
after every page read (disk).
"""

import errno
import fcntl
import logging
import mmap
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .errors import (
    AllocationFailure,
    DirectIoUnsupported,
    FileCreationFailure,
    InvalidDuration,
    InvalidProbeConfig,
    ProbeBusy,
    UnevenPartition,
    WorkerSpawnFailure,
)

log = logging.getLogger(__name__)

#: maximum allowed overshoot past the configured duration, seconds
GRACE = 0.5

GIB = 1 << 30
MIB = 1 << 20

DEFAULT_MEM_ARRAY_BYTES = 2 * GIB
DEFAULT_MEM_STRIDE_BYTES = 128
DEFAULT_DISK_FILE_BYTES = 256 * MIB
DEFAULT_DISK_PAGE_BYTES = 4096
DEFAULT_DISK_WORKERS = 4

def default_probe_path() -> str:
    """Scratch file for the disk probe; kept out of the working directory."""
    return os.path.join(tempfile.gettempdir(), "probecast_probe.bin")



class ProbeKind(str, Enum):
    CPU = "cpu"
    MEM = "mem"
    DISK = "disk"


@dataclass(frozen=True)
class ProbeConfig:
    kind: ProbeKind
    duration: float
    workers: Optional[int] = None
    mem_array_bytes: int = DEFAULT_MEM_ARRAY_BYTES
    mem_stride_bytes: int = DEFAULT_MEM_STRIDE_BYTES
    disk_file_bytes: int = DEFAULT_DISK_FILE_BYTES
    disk_page_bytes: int = DEFAULT_DISK_PAGE_BYTES
    disk_path: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", ProbeKind(self.kind))
        if not self.disk_path:
            object.__setattr__(self, "disk_path", default_probe_path())
        if not (self.duration > 0):
            raise InvalidDuration(f"duration must be > 0, got {self.duration}")
        if self.workers is not None and self.workers < 1:
            raise InvalidProbeConfig(f"workers must be >= 1, got {self.workers}")
        if self.mem_stride_bytes < 64:
            raise InvalidProbeConfig(
                f"mem_stride_bytes must be >= 64 (one cache line), got {self.mem_stride_bytes}")
        if self.mem_array_bytes % self.mem_stride_bytes != 0:
            raise InvalidProbeConfig("mem_array_bytes must be a multiple of mem_stride_bytes")
        if self.disk_page_bytes < 512 or self.disk_page_bytes % 512 != 0:
            raise InvalidProbeConfig("disk_page_bytes must be a positive multiple of 512")
        if self.disk_file_bytes % self.disk_page_bytes != 0:
            raise InvalidProbeConfig("disk_file_bytes must be a multiple of disk_page_bytes")

    @property
    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        if self.kind is ProbeKind.DISK:
            return DEFAULT_DISK_WORKERS
        return os.cpu_count() or 1


@dataclass(frozen=True)
class ProbeResult:
    kind: ProbeKind
    count: int
    elapsed: float
    per_worker_counts: tuple

    def __post_init__(self):
        assert self.count == sum(self.per_worker_counts)


# Only one probe may run at a time in a process: overlapping probes would
# contend with each other and corrupt both measurements.
_probe_lock = threading.Lock()


def _run_workers(worker_fns, duration, kind):
    """Spawn one thread per worker fn, run them until the shared deadline,
    and return (per_worker_counts, elapsed)."""
    counts = [0] * len(worker_fns)
    failures = []

    def call(i, fn, deadline):
        try:
            counts[i] = fn(deadline)
        except BaseException as exc:  # surfaced after join
            failures.append(exc)

    kernels.warmup()
    if not _probe_lock.acquire(blocking=False):
        raise ProbeBusy("another probe is already running in this process")
    try:
        threads = []
        t0 = time.perf_counter()
        deadline = t0 + duration
        try:
            for i, fn in enumerate(worker_fns):
                th = threading.Thread(
                    target=call, args=(i, fn, deadline),
                    name=f"probecast-{kind.value}-{i}", daemon=True)
                th.start()
                threads.append(th)
        except RuntimeError as exc:
            raise WorkerSpawnFailure(str(exc)) from exc
        for th in threads:
            th.join()
        elapsed = time.perf_counter() - t0
    finally:
        _probe_lock.release()

    if failures:
        raise failures[0]
    return tuple(counts), elapsed


# --- CPU probe --------------------------------------------------------------

def run_cpu_probe(config: ProbeConfig) -> ProbeResult:
    """Spin one in-register counter chain per worker until the deadline."""
    _require_kind(config, ProbeKind.CPU)
    workers = config.resolved_workers

    def make_worker(idx):
        state = kernels.new_cpu_state(seed=88172645463325252 + idx)

        def work(deadline):
            count = 0
            while time.perf_counter() < deadline:
                count += kernels.cpu_chunk(state, kernels.CPU_CHECK_EVERY)
            return count

        return work

    per_counts, elapsed = _run_workers(
        [make_worker(i) for i in range(workers)], config.duration, config.kind)
    return ProbeResult(config.kind, sum(per_counts), elapsed, per_counts)


# --- memory probe -----------------------------------------------------------

# One cached array, keyed by size; reallocation on every profiling pass would
# dominate the window for the default 2 GiB array.
_mem_cache: dict = {}


def _probe_array(nbytes: int) -> np.ndarray:
    arr = _mem_cache.get(nbytes)
    if arr is None:
        try:
            arr = np.zeros(nbytes, dtype=np.uint8)
        except MemoryError as exc:
            raise AllocationFailure(f"cannot allocate {nbytes} byte probe array") from exc
        arr[::mmap.PAGESIZE] = 1  # fault pages in before any timed access
        _mem_cache.clear()
        _mem_cache[nbytes] = arr
    return arr


def clear_probe_caches():
    _mem_cache.clear()


def partition_slots(n_slots: int, workers: int):
    """Split n_slots into `workers` contiguous, near-equal slot ranges."""
    if workers > n_slots:
        raise UnevenPartition(
            f"{workers} workers but only {n_slots} stride slots to partition")
    q, r = divmod(n_slots, workers)
    ranges = []
    start = 0
    for i in range(workers):
        size = q + (1 if i < r else 0)
        ranges.append((start, start + size))
        start += size
    return ranges


def run_mem_probe(config: ProbeConfig) -> ProbeResult:
    """Strided reads over disjoint shares of a large array until the deadline.

    The stride (default 128 B) keeps successive accesses on distinct cache
    lines so each access goes to off-core memory.
    """
    _require_kind(config, ProbeKind.MEM)
    workers = config.resolved_workers
    stride = config.mem_stride_bytes
    n_slots = config.mem_array_bytes // stride
    shares = partition_slots(n_slots, workers)
    arr = _probe_array(config.mem_array_bytes)

    def make_worker(share):
        lo = share[0] * stride
        hi = share[1] * stride

        def work(deadline):
            count = 0
            off = lo
            while time.perf_counter() < deadline:
                off, done, _ = kernels.mem_chunk(
                    arr, off, lo, hi, stride, kernels.MEM_CHECK_EVERY)
                count += done
            return count

        return work

    per_counts, elapsed = _run_workers(
        [make_worker(s) for s in shares], config.duration, config.kind)
    return ProbeResult(config.kind, sum(per_counts), elapsed, per_counts)


def mem_probe_offsets(config: ProbeConfig, n: int = 100, worker: int = 0) -> np.ndarray:
    """Instrumented test mode: the first `n` byte offsets worker `worker`
    would touch, produced by the same address generator as the probe."""
    _require_kind(config, ProbeKind.MEM)
    stride = config.mem_stride_bytes
    shares = partition_slots(config.mem_array_bytes // stride, config.resolved_workers)
    lo, hi = shares[worker][0] * stride, shares[worker][1] * stride
    out = np.empty(n, dtype=np.int64)
    kernels.mem_walk_offsets(lo, lo, hi, stride, out)
    return out


# --- disk probe -------------------------------------------------------------

def ensure_probe_file(path, nbytes: int, seed: int = 0):
    """Create the probe file filled with pseudorandom bytes if missing or of
    the wrong size."""
    path = Path(path)
    try:
        if path.exists() and path.stat().st_size == nbytes:
            return path
        rng = np.random.default_rng(seed)
        chunk = 4 * MIB
        with open(path, "wb") as f:
            remaining = nbytes
            while remaining > 0:
                n = min(chunk, remaining)
                f.write(rng.integers(0, 256, n, dtype=np.uint8).tobytes())
                remaining -= n
            f.flush()
            os.fsync(f.fileno())
    except OSError as exc:
        raise FileCreationFailure(f"cannot create probe file {path}: {exc}") from exc
    return path


def open_direct(path) -> int:
    """Open `path` for reading with the OS page cache bypassed.

    Raises DirectIoUnsupported if the filesystem refuses; silently reading
    from cache would make the probe measure nothing.
    """
    try:
        fd = os.open(str(path), os.O_RDONLY | os.O_DIRECT)
    except OSError as exc:
        if exc.errno in (errno.EINVAL, errno.ENOTSUP, errno.EOPNOTSUPP):
            raise DirectIoUnsupported(
                f"direct I/O refused for {path}: {exc}") from exc
        raise FileCreationFailure(str(exc)) from exc
    flags = fcntl.fcntl(fd, fcntl.F_GETFL)
    if not flags & os.O_DIRECT:  # pragma: no cover - defensive
        os.close(fd)
        raise DirectIoUnsupported(f"O_DIRECT silently dropped for {path}")
    return fd


def run_disk_probe(config: ProbeConfig) -> ProbeResult:
    """Page-sized direct-I/O reads, wrapping around the probe file.

    Workers start in interleaved file regions and read sequential pages,
    wrapping at the end of the file.
    """
    _require_kind(config, ProbeKind.DISK)
    workers = config.resolved_workers
    page = config.disk_page_bytes
    n_pages = config.disk_file_bytes // page
    path = ensure_probe_file(config.disk_path, config.disk_file_bytes)

    def make_worker(idx):
        start_page = (idx * n_pages) // workers

        def work(deadline):
            fd = open_direct(path)
            buf = mmap.mmap(-1, page)  # page-aligned, as direct I/O requires
            count = 0
            p = start_page
            try:
                while time.perf_counter() < deadline:
                    try:
                        n = os.preadv(fd, [buf], p * page)
                    except OSError as exc:
                        if exc.errno == errno.EINVAL:
                            raise DirectIoUnsupported(
                                f"direct read refused for {path}: {exc}") from exc
                        raise
                    if n != page:  # pragma: no cover - truncated file
                        raise FileCreationFailure(
                            f"short read ({n} of {page} bytes) from {path}")
                    count += 1
                    p += 1
                    if p >= n_pages:
                        p = 0
            finally:
                buf.close()
                os.close(fd)
            return count

        return work

    per_counts, elapsed = _run_workers(
        [make_worker(i) for i in range(workers)], config.duration, config.kind)
    return ProbeResult(config.kind, sum(per_counts), elapsed, per_counts)


def run_probe(config: ProbeConfig) -> ProbeResult:
    return {
        ProbeKind.CPU: run_cpu_probe,
        ProbeKind.MEM: run_mem_probe,
        ProbeKind.DISK: run_disk_probe,
    }[config.kind](config)


def _require_kind(config: ProbeConfig, kind: ProbeKind):
    if config.kind is not kind:
        raise InvalidProbeConfig(f"expected a {kind.value} probe config, got {config.kind.value}")

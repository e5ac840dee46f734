"""Sequential profiling pass and training-tuple collection.

A profiling pass runs the CPU, memory and disk probes back to back (in that
order) for one window each, producing a contention vector. A collection
iteration runs a pass and then times the target command, yielding one
{c_cpu, c_mem, c_disk, t_app} tuple; a campaign repeats that and appends to
a dataset file.
"""

import logging
import subprocess
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InvalidDuration, StorageFailure, TargetLaunchFailure, TargetNonZeroExit
from .probes import (
    DEFAULT_DISK_FILE_BYTES,
    DEFAULT_DISK_PAGE_BYTES,
    DEFAULT_MEM_ARRAY_BYTES,
    DEFAULT_MEM_STRIDE_BYTES,
    ProbeConfig,
    ProbeKind,
    default_probe_path,
    run_cpu_probe,
    run_disk_probe,
    run_mem_probe,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContentionVector:
    """Counters from one profiling pass: {c_cpu, c_mem, c_disk}."""
    c_cpu: int
    c_mem: int
    c_disk: int
    window: float
    taken_at: float

    def __post_init__(self):
        if min(self.c_cpu, self.c_mem, self.c_disk) < 0:
            raise ValueError("probe counts must be >= 0")
        if not (self.window > 0):
            raise InvalidDuration(f"window must be > 0, got {self.window}")

    def as_tuple(self):
        return (self.c_cpu, self.c_mem, self.c_disk)


@dataclass(frozen=True)
class Sample:
    """One training tuple: a contention vector plus the measured run time."""
    contention: ContentionVector
    t_app: float
    taken_at: float

    def __post_init__(self):
        if not (self.t_app > 0):
            raise ValueError(f"t_app must be > 0, got {self.t_app}")


@dataclass(frozen=True)
class ProfileSettings:
    """Probe parameters shared by every pass of a campaign."""
    workers: Optional[int] = None
    disk_workers: Optional[int] = None
    mem_array_bytes: int = DEFAULT_MEM_ARRAY_BYTES
    mem_stride_bytes: int = DEFAULT_MEM_STRIDE_BYTES
    disk_file_bytes: int = DEFAULT_DISK_FILE_BYTES
    disk_page_bytes: int = DEFAULT_DISK_PAGE_BYTES
    disk_path: str = ""

    def probe_config(self, kind: ProbeKind, window: float) -> ProbeConfig:
        workers = self.disk_workers if kind is ProbeKind.DISK else self.workers
        return ProbeConfig(
            kind=kind,
            duration=window,
            workers=workers,
            mem_array_bytes=self.mem_array_bytes,
            mem_stride_bytes=self.mem_stride_bytes,
            disk_file_bytes=self.disk_file_bytes,
            disk_page_bytes=self.disk_page_bytes,
            disk_path=self.disk_path,
        )


def profile(window: float, settings: Optional[ProfileSettings] = None) -> ContentionVector:
    """Run the three probes sequentially (CPU, then memory, then disk) for
    `window` seconds each and return their counts."""
    if not (window > 0):
        raise InvalidDuration(f"window must be > 0, got {window}")
    settings = settings or ProfileSettings()
    cpu = run_cpu_probe(settings.probe_config(ProbeKind.CPU, window))
    mem = run_mem_probe(settings.probe_config(ProbeKind.MEM, window))
    disk = run_disk_probe(settings.probe_config(ProbeKind.DISK, window))
    return ContentionVector(
        c_cpu=cpu.count, c_mem=mem.count, c_disk=disk.count,
        window=window, taken_at=time.time())


def collect_iteration(target: Sequence[str], window: float,
                      settings: Optional[ProfileSettings] = None) -> Sample:
    """One training iteration: profile, then run and time the target command.

    t_app is the wall-clock time of the child process from spawn to exit.
    """
    vector = profile(window, settings)
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(
            list(target), stdout=subprocess.DEVNULL, stderr=subprocess.PIPE)
    except OSError as exc:
        raise TargetLaunchFailure(f"cannot launch {target[0]!r}: {exc}") from exc
    t_app = time.perf_counter() - t0
    if proc.returncode != 0:
        tail = proc.stderr.decode(errors="replace")[-500:]
        raise TargetNonZeroExit(proc.returncode, tail)
    return Sample(contention=vector, t_app=t_app, taken_at=time.time())


def collect_campaign(target: Sequence[str], window: float, iterations: int,
                     store, settings: Optional[ProfileSettings] = None,
                     pause: float = 0.0) -> int:
    """Run `iterations` collection iterations back to back, appending each
    sample to the dataset file `store`. Iterations whose target exits
    nonzero are logged and skipped; returns the number of samples stored."""
    from .dataset import append_sample  # deferred: dataset imports our types

    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    stored = 0
    for i in range(iterations):
        try:
            sample = collect_iteration(target, window, settings)
        except TargetNonZeroExit as exc:
            log.warning("iteration %d: target failed (%s); sample discarded; "
                        "stderr: %s", i, exc, exc.stderr_tail.strip() or "<empty>")
            continue
        try:
            append_sample(store, sample)
        except OSError as exc:
            raise StorageFailure(f"cannot append to {store}: {exc}") from exc
        stored += 1
        log.info("iteration %d/%d: t_app=%.3fs", i + 1, iterations, sample.t_app)
        if pause > 0:
            time.sleep(pause)
    return stored

"""Hot inner loops for the probes, load injectors and the target kernel.

Each kernel executes one bounded chunk of work per call and returns; the
calling worker loop checks its deadline between chunks. The stop check
cannot live inside the compiled loop: with no store to the flag inside the
loop body, LLVM hoists the flag load out of the loop and the kernel never
observes the write (verified empirically), so chunked re-entry is the
reliable way to bound overshoot.

The CPU chunk advances a xorshift64 state. A bare ``count += 1`` loop is
collapsed by the optimizer into a single add, and an affine (LCG) recurrence
gets closed-formed by scalar evolution; the xorshift chain has no closed
form, so every counted step is one executed serial register operation.

Two implementations exist per kernel: a numba @njit one and a pure-numpy
one, selected at import time (see accel.py).
"""

import numpy as np

from .accel import USING_NUMBA, jit

_U64 = np.uint64

#: chunk sizes between deadline checks (CPU ops / memory accesses)
CPU_CHECK_EVERY = 1 << 16
MEM_CHECK_EVERY = 1 << 12


def new_cpu_state(seed: int = 88172645463325252) -> np.ndarray:
    """Opaque per-worker state for cpu_chunk. The numba path keeps a single
    serial lane; the numpy fallback uses many lanes to amortize dispatch."""
    if USING_NUMBA:
        lanes = 1
    else:
        lanes = 1024
    base = np.arange(1, lanes + 1, dtype=np.uint64)
    return (base * _U64(0x9E3779B97F4A7C15) + _U64(seed)) | _U64(1)


_warmed = False


def warmup() -> None:
    """Compile (or load from cache) every kernel before anything is timed;
    JIT latency inside a probe window would corrupt the measurement."""
    global _warmed
    if _warmed:
        return
    cpu_chunk(new_cpu_state(), 8)
    arr = np.zeros(1024, dtype=np.uint8)
    mem_chunk(arr, 0, 0, 1024, 128, 8)
    mem_walk_offsets(0, 0, 1024, 128, np.empty(4, dtype=np.int64))
    _warmed = True


if USING_NUMBA:
    from numba import njit, uint64

    @njit(nogil=True, cache=True)
    def cpu_chunk(state, n):
        s = state[0]
        i = 0
        while i < n:
            s ^= s << uint64(13)
            s ^= s >> uint64(7)
            s ^= s << uint64(17)
            i += 1
        state[0] = s
        return n

    @njit(nogil=True, cache=True)
    def mem_chunk(arr, off, lo, hi, stride, n):
        acc = uint64(0)
        i = 0
        while i < n:
            acc += uint64(arr[off])
            off += stride
            if off >= hi:
                off = lo
            i += 1
        return off, n, acc

    @njit(nogil=True, cache=True)
    def mem_walk_offsets(off, lo, hi, stride, out):
        # mirrors mem_chunk's address sequence; used by the instrumented
        # test mode to assert the stride contract
        for i in range(out.shape[0]):
            out[i] = off
            off += stride
            if off >= hi:
                off = lo
        return off

else:
    def cpu_chunk(state, n):
        lanes = state.shape[0]
        rounds = max(1, n // lanes)
        s = state
        for _ in range(rounds):
            s ^= s << _U64(13)
            s ^= s >> _U64(7)
            s ^= s << _U64(17)
        state[:] = s
        return rounds * lanes

    def mem_chunk(arr, off, lo, hi, stride, n):
        slots = (hi - lo) // stride
        start = (off - lo) // stride
        idx = (start + np.arange(n, dtype=np.int64)) % slots
        acc = arr[lo + idx * stride].sum(dtype=np.uint64)
        next_off = lo + int((start + n) % slots) * stride
        return next_off, n, acc

    def mem_walk_offsets(off, lo, hi, stride, out):
        slots = (hi - lo) // stride
        start = (off - lo) // stride
        k = out.shape[0]
        idx = (start + np.arange(k, dtype=np.int64)) % slots
        out[:] = lo + idx * stride
        return lo + int((start + k) % slots) * stride

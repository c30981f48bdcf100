"""CPU STREAM benchmark: Copy, Scale, Add, Triad over three large arrays.

A worker pool sweeps thread counts from one to the number of cores; each
(kernel, thread count) cell is timed ``repetitions`` times, the first
repetition is discarded as warm-up, and the best (minimum) time defines the
reported bandwidth.  Kernel semantics follow the reference benchmark:

    copy:   c[i] = a[i]
    scale:  b[i] = q * c[i]
    add:    c[i] = a[i] + b[i]
    triad:  a[i] = b[i] + q * c[i]
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from threading import Barrier

import numpy as np

from unibench import kernels
from unibench.mem import PAGE_SIZE, page_aligned_empty

KERNELS = ("copy", "scale", "add", "triad")

# Bytes touched per element: copy/scale read one array and write one,
# add/triad read two and write one.
_ARRAYS_MOVED = {"copy": 2, "scale": 2, "add": 3, "triad": 3}

THREADS_ENV = "UNIBENCH_THREADS"

# Larger than 4x any last-level cache in the shipped catalog (16 MB + 4 MB).
DEFAULT_CACHE_HINT = 24 * 2**20


class StreamConfigError(ValueError):
    """Configuration violates the benchmark's preconditions."""


def _default_thread_counts() -> list[int]:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            counts = [int(t) for t in env.split(",") if t.strip()]
        except ValueError as exc:
            raise StreamConfigError(f"{THREADS_ENV}={env!r}: {exc}") from exc
        if not counts or any(t < 1 for t in counts):
            raise StreamConfigError(f"{THREADS_ENV}={env!r}: counts must be >= 1")
        return counts
    return list(range(1, (os.cpu_count() or 1) + 1))


def _default_n_elements() -> int:
    # 2^25 FP32 per array (384 MiB working set) needs a machine with >= 8 GB.
    try:
        ram = os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        ram = 0
    return 2**25 if ram >= 8 * 2**30 else 2**23


@dataclass
class StreamConfig:
    n_elements: int
    elem_bytes: int = 4
    scalar_q: float = 3.0
    repetitions: int = 10
    thread_counts: list[int] = field(default_factory=_default_thread_counts)
    cache_size_hint: int = DEFAULT_CACHE_HINT

    @classmethod
    def default(cls) -> "StreamConfig":
        return cls(n_elements=_default_n_elements())

    def validate(self):
        if self.n_elements < 1:
            raise StreamConfigError(f"n_elements must be >= 1, got {self.n_elements}")
        if self.elem_bytes not in (4, 8):
            raise StreamConfigError(f"elem_bytes must be 4 or 8, got {self.elem_bytes}")
        if self.repetitions < 2:
            raise StreamConfigError(
                f"repetitions must be >= 2 (first is warm-up), got {self.repetitions}"
            )
        if not self.thread_counts or any(t < 1 for t in self.thread_counts):
            raise StreamConfigError(f"thread_counts must all be >= 1: {self.thread_counts}")
        working_set = 3 * self.n_elements * self.elem_bytes
        if working_set <= 4 * self.cache_size_hint:
            raise StreamConfigError(
                f"working set {working_set} bytes must exceed 4x the cache hint "
                f"({self.cache_size_hint}); raise n_elements or lower the hint"
            )

    @property
    def dtype(self):
        return np.float32 if self.elem_bytes == 4 else np.float64


@dataclass
class StreamArrays:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def n(self) -> int:
        return len(self.a)


def stream_init(config: StreamConfig) -> StreamArrays:
    """Page-aligned arrays initialized to a=1, b=2, c=0."""
    if config.n_elements < 1:
        raise StreamConfigError(f"n_elements must be >= 1, got {config.n_elements}")
    dt = config.dtype
    a = page_aligned_empty(config.n_elements, dt)
    b = page_aligned_empty(config.n_elements, dt)
    c = page_aligned_empty(config.n_elements, dt)
    a[:] = 1.0
    b[:] = 2.0
    c[:] = 0.0
    for arr in (a, b, c):
        assert arr.ctypes.data % PAGE_SIZE == 0
    return StreamArrays(a, b, c)


def partition(n: int, workers: int) -> list[tuple[int, int]]:
    """Split [0, n) into `workers` contiguous chunks differing by at most one
    element; every index is covered exactly once."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    base, rem = divmod(n, workers)
    chunks = []
    start = 0
    for w in range(workers):
        size = base + (1 if w < rem else 0)
        chunks.append((start, start + size))
        start += size
    return chunks


def _warm_pool(pool: ThreadPoolExecutor, workers: int):
    # Forces the executor to spawn all worker threads now, so thread start-up
    # never lands inside a timed region.
    barrier = Barrier(workers)
    futures = [pool.submit(barrier.wait) for _ in range(workers)]
    for f in futures:
        f.result()


def run_kernel(
    kind: str,
    arrays: StreamArrays,
    q: float,
    threads: int,
    pool: ThreadPoolExecutor | None = None,
) -> float:
    """Run one kernel over the full arrays with `threads` workers; returns
    the wall time in seconds of the kernel only (nanosecond clock)."""
    if kind not in KERNELS:
        raise ValueError(f"unknown kernel {kind!r}; expected one of {KERNELS}")
    fn = kernels.STREAM_KERNELS[kind]
    a, b, c = arrays.a, arrays.b, arrays.c
    if threads == 1:
        t0 = time.perf_counter_ns()
        fn(a, b, c, q, 0, arrays.n)
        return (time.perf_counter_ns() - t0) / 1e9

    own_pool = pool is None
    if own_pool:
        pool = ThreadPoolExecutor(max_workers=threads)
        _warm_pool(pool, threads)
    try:
        chunks = partition(arrays.n, threads)
        t0 = time.perf_counter_ns()
        futures = [pool.submit(fn, a, b, c, q, i0, i1) for i0, i1 in chunks]
        for f in futures:
            f.result()
        return (time.perf_counter_ns() - t0) / 1e9
    finally:
        if own_pool:
            pool.shutdown(wait=True)


def bytes_moved(kind: str, n_elements: int, elem_bytes: int) -> int:
    """Bytes transferred by one kernel pass (standard STREAM accounting)."""
    return _ARRAYS_MOVED[kind] * n_elements * elem_bytes


@dataclass
class KernelTiming:
    """Timing for one (kernel, thread count) cell; times exclude warm-up."""

    best_bandwidth_gbs: float
    best_time_s: float
    all_times_s: list[float]

    def to_dict(self) -> dict:
        return {
            "best_bandwidth_gbs": self.best_bandwidth_gbs,
            "best_time_s": self.best_time_s,
            "all_times_s": list(self.all_times_s),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelTiming":
        return cls(d["best_bandwidth_gbs"], d["best_time_s"], list(d["all_times_s"]))


def summarize_times(kind: str, n_elements: int, elem_bytes: int, times_s: list[float]) -> KernelTiming:
    """Best-of-N accounting: bandwidth = bytes_moved / min(times)."""
    if not times_s:
        raise ValueError("need at least one timed sample")
    best = min(times_s)
    bw = bytes_moved(kind, n_elements, elem_bytes) / best / 1e9
    return KernelTiming(best_bandwidth_gbs=bw, best_time_s=best, all_times_s=list(times_s))


@dataclass
class ValidationFailure:
    array: str
    expected: float
    worst_observed: float
    rel_error: float


@dataclass
class ValidationReport:
    passed: bool
    tolerance: float
    expected: dict[str, float]
    failures: list[ValidationFailure]


def expected_scalars(iterations: int, q: float, dtype=np.float32) -> tuple[float, float, float]:
    """Run the kernel sequence on scalars: the independent oracle for
    validate_stream.  Evaluated in the array dtype so rounding matches."""
    dt = np.dtype(dtype).type
    a, b, c = dt(1.0), dt(2.0), dt(0.0)
    qv = dt(q)
    for _ in range(iterations):
        c = a
        b = qv * c
        c = a + b
        a = b + qv * c
    return float(a), float(b), float(c)


def validate_stream(arrays: StreamArrays, iterations: int, q: float) -> ValidationReport:
    """Check all elements against the scalar recurrence after `iterations`
    full copy-scale-add-triad sequences from the standard initialization."""
    tol = 1e-6 if arrays.a.dtype == np.float32 else 1e-13
    ea, eb, ec = expected_scalars(iterations, q, arrays.a.dtype)
    expected = {"a": ea, "b": eb, "c": ec}
    failures = []
    for name, arr in (("a", arrays.a), ("b", arrays.b), ("c", arrays.c)):
        exp = expected[name]
        err = np.abs(arr.astype(np.float64) - exp)
        denom = abs(exp) if exp != 0 else 1.0
        worst = int(np.argmax(err))
        rel = float(err[worst]) / denom
        if rel > tol:
            failures.append(
                ValidationFailure(
                    array=name,
                    expected=exp,
                    worst_observed=float(arr[worst]),
                    rel_error=rel,
                )
            )
    return ValidationReport(passed=not failures, tolerance=tol, expected=expected, failures=failures)


@dataclass
class StreamResult:
    """Per-(kernel, thread count) best bandwidths plus validation status."""

    entries: dict[tuple[str, int], KernelTiming]
    validation_passed: bool
    n_elements: int
    elem_bytes: int
    scalar_q: float
    repetitions: int
    thread_counts: list[int]
    backend: str = kernels.BACKEND

    def best(self, kind: str) -> tuple[float, int]:
        """Headline (bandwidth GB/s, thread count) for one kernel: the max
        across the thread sweep."""
        cells = [(t.best_bandwidth_gbs, threads) for (k, threads), t in self.entries.items() if k == kind]
        if not cells:
            raise KeyError(f"no results for kernel {kind!r}")
        return max(cells)

    def headline(self) -> dict[str, tuple[float, int]]:
        return {k: self.best(k) for k in KERNELS if any(key[0] == k for key in self.entries)}

    def to_dict(self) -> dict:
        return {
            "entries": {f"{k}@{t}": timing.to_dict() for (k, t), timing in self.entries.items()},
            "validation_passed": self.validation_passed,
            "n_elements": self.n_elements,
            "elem_bytes": self.elem_bytes,
            "scalar_q": self.scalar_q,
            "repetitions": self.repetitions,
            "thread_counts": list(self.thread_counts),
            "backend": self.backend,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StreamResult":
        entries = {}
        for key, timing in d["entries"].items():
            kernel, threads = key.rsplit("@", 1)
            entries[(kernel, int(threads))] = KernelTiming.from_dict(timing)
        return cls(
            entries=entries,
            validation_passed=d["validation_passed"],
            n_elements=d["n_elements"],
            elem_bytes=d["elem_bytes"],
            scalar_q=d["scalar_q"],
            repetitions=d["repetitions"],
            thread_counts=list(d["thread_counts"]),
            backend=d.get("backend", "unknown"),
        )


def run_stream_suite(config: StreamConfig) -> StreamResult:
    """Full sweep: thread counts x kernels x repetitions, fresh arrays per
    thread count, validation once at the end."""
    config.validate()
    q = config.scalar_q
    entries: dict[tuple[str, int], KernelTiming] = {}
    max_workers = max(config.thread_counts)
    pool = ThreadPoolExecutor(max_workers=max_workers) if max_workers > 1 else None
    if pool is not None:
        _warm_pool(pool, max_workers)
    arrays = None
    try:
        for threads in config.thread_counts:
            arrays = stream_init(config)
            times: dict[str, list[float]] = {k: [] for k in KERNELS}
            for _ in range(config.repetitions):
                for kind in KERNELS:
                    times[kind].append(run_kernel(kind, arrays, q, threads, pool))
            for kind in KERNELS:
                samples = times[kind][1:]  # first repetition is warm-up
                entries[(kind, threads)] = summarize_times(
                    kind, config.n_elements, config.elem_bytes, samples
                )
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    validation = validate_stream(arrays, config.repetitions, q)
    return StreamResult(
        entries=entries,
        validation_passed=validation.passed,
        n_elements=config.n_elements,
        elem_bytes=config.elem_bytes,
        scalar_q=q,
        repetitions=config.repetitions,
        thread_counts=list(config.thread_counts),
    )

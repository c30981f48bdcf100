"""Square FP32 matrix-multiply benchmark.

Implementations: a single-threaded naive triple loop (the verification
oracle), a multi-threaded tiled variant, and an adapter to an external
optimized BLAS provider.  FLOPS are counted as n^2 * (2n - 1) — the
multiply-count convention used throughout this suite, not the common 2n^3.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from unibench import kernels
from unibench.mem import page_aligned_bytes, round_up_pages

DEFAULT_SIZES = [32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384]
DEFAULT_SEED = 42
DEFAULT_TILE = 64

# The slow CPU paths stop at 4096; larger sizes take hours on them.
DEFAULT_SKIP_RULES = {"naive": 4096, "tiled": 4096}

CPU_IMPLEMENTATIONS = ("naive", "tiled", "blas")
VERIFY_MAX_N = 1024  # suite-level verification cap, lifted by verify_all

FP32_EPS = 2.0**-23


class GemmConfigError(ValueError):
    pass


class ProviderUnavailable(RuntimeError):
    """The requested external GEMM provider cannot be used."""


@dataclass
class MatrixF32:
    """n x n row-major FP32 matrix in a page-aligned buffer padded to a
    whole number of 16,384-byte pages, so a GPU can wrap it without copies."""

    n: int
    buffer: np.ndarray  # uint8 view, len == alloc_bytes, page-aligned

    @property
    def alloc_bytes(self) -> int:
        return len(self.buffer)

    @property
    def data(self) -> np.ndarray:
        """Flat float32 view of the n*n elements (padding excluded)."""
        return self.buffer[: self.n * self.n * 4].view(np.float32)

    def as_2d(self) -> np.ndarray:
        return self.data.reshape(self.n, self.n)


def alloc_matrix(n: int) -> MatrixF32:
    if n < 1:
        raise GemmConfigError(f"matrix size must be >= 1, got {n}")
    buf = page_aligned_bytes(round_up_pages(n * n * 4))
    return MatrixF32(n=n, buffer=buf)


# --- deterministic matrix generation --------------------------------------
#
# Counter-based SplitMix64: element i (0-based, row-major) of matrix
# (n, seed) is
#   z     = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)   (all mod 2^64)
#   value = float32((z >> 40) * 2^-24)                    in [0, 1)
# The top 24 bits map exactly onto the FP32 mantissa, so any language can
# reproduce bit-identical matrices.

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def generate_matrix(n: int, seed: int) -> MatrixF32:
    """Deterministic dense matrix, values uniform in [0, 1); bit-identical
    for a fixed (n, seed).  Padding bytes stay zero."""
    m = alloc_matrix(n)
    idx = np.arange(1, n * n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64(np.uint64(seed % 2**64) + idx * _GAMMA)
    m.data[:] = ((z >> np.uint64(40)).astype(np.float64) * 2.0**-24).astype(np.float32)
    return m


def gemm_flops(n: int) -> int:
    """Exact operation count n^2 * (2n - 1); Python ints never overflow."""
    if n < 1:
        raise GemmConfigError(f"n must be >= 1, got {n}")
    return n * n * (2 * n - 1)


def gflops_from_times(n: int, times_s: list[float]) -> float:
    """Best-of-N: GFLOPS computed from the minimum time."""
    if not times_s:
        raise ValueError("need at least one timed sample")
    return gemm_flops(n) / min(times_s) / 1e9


# --- implementations -------------------------------------------------------


def _check_dims(a: "MatrixF32", b: "MatrixF32"):
    if a.n != b.n:
        raise GemmConfigError(f"dimension mismatch: {a.n} vs {b.n}")


def gemm_naive(a: MatrixF32, b: MatrixF32, out: MatrixF32 | None = None) -> MatrixF32:
    """Single-threaded triple loop, FP32 accumulation with k ascending.
    This is the oracle every other implementation is verified against."""
    _check_dims(a, b)
    c = out or alloc_matrix(a.n)
    kernels.gemm_naive(a.as_2d(), b.as_2d(), c.as_2d())
    return c


def _tile_spans(n: int, tile: int, workers: int) -> list[tuple[int, int]]:
    """Contiguous spans of whole output-row tiles, one span per worker."""
    n_tiles = -(-n // tile)
    workers = min(workers, n_tiles)
    base, rem = divmod(n_tiles, workers)
    spans = []
    start = 0
    for w in range(workers):
        count = base + (1 if w < rem else 0)
        end = min(n, (start + count) * tile)
        spans.append((start * tile, end))
        start += count
    return spans


def gemm_tiled(
    a: MatrixF32,
    b: MatrixF32,
    tile: int = DEFAULT_TILE,
    threads: int | None = None,
    out: MatrixF32 | None = None,
) -> MatrixF32:
    """Tiled multiply, parallel over blocks of output rows.  Workers write
    disjoint row ranges, so the result is independent of the thread count."""
    _check_dims(a, b)
    if tile < 1:
        raise GemmConfigError(f"tile must be >= 1, got {tile}")
    n = a.n
    c = out or alloc_matrix(n)
    c2 = c.as_2d()
    c2[:] = 0.0
    a2, b2 = a.as_2d(), b.as_2d()
    workers = threads if threads else (os.cpu_count() or 1)
    spans = _tile_spans(n, tile, workers)
    if len(spans) == 1:
        kernels.gemm_tiled_rows(a2, b2, c2, tile, 0, n)
        return c
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        futures = [
            pool.submit(kernels.gemm_tiled_rows, a2, b2, c2, tile, r0, r1) for r0, r1 in spans
        ]
        for f in futures:
            f.result()
    return c


def _blas_matmul(a2: np.ndarray, b2: np.ndarray, c2: np.ndarray):
    np.matmul(a2, b2, out=c2)


# Name -> callable(a2d, b2d, out2d).  Tests may register fakes.
PROVIDERS = {"blas": _blas_matmul}


def get_provider(name: str):
    """Resolve an external-GEMM provider; raises ProviderUnavailable for
    'none' or an unknown provider."""
    if name == "none":
        raise ProviderUnavailable("external provider disabled (provider=none)")
    fn = PROVIDERS.get(name)
    if fn is None:
        raise ProviderUnavailable(
            f"unknown provider {name!r}; available: {', '.join(sorted(PROVIDERS))}, none"
        )
    return fn


def gemm_external(
    a: MatrixF32, b: MatrixF32, provider: str = "blas", out: MatrixF32 | None = None
) -> MatrixF32:
    """Delegate to an optimized single-precision multiply (alpha=1, beta=0,
    row-major, no transposition)."""
    _check_dims(a, b)
    fn = get_provider(provider)
    c = out or alloc_matrix(a.n)
    fn(a.as_2d(), b.as_2d(), c.as_2d())
    return c


# --- verification ----------------------------------------------------------


@dataclass
class VerifyResult:
    passed: bool
    max_abs_error: float
    bound: float
    worst_index: tuple[int, int]
    observed: float
    expected: float


def verify_bound(n: int, max_a: float, max_b: float) -> float:
    """Forward-error envelope 16 * eps * n * max|A| * max|B|; the constant
    is loose enough for any summation order."""
    return 16.0 * FP32_EPS * n * max_a * max_b


def verify_gemm(c: MatrixF32, c_oracle: MatrixF32, a: MatrixF32, b: MatrixF32) -> VerifyResult:
    """Element-wise comparison against the oracle within the forward-error
    bound; reports the worst element and its indices."""
    n = c.n
    diff = np.abs(c.as_2d().astype(np.float64) - c_oracle.as_2d().astype(np.float64))
    worst_flat = int(np.argmax(diff))
    i, j = divmod(worst_flat, n)
    max_err = float(diff[i, j])
    bound = verify_bound(n, float(np.max(np.abs(a.data))), float(np.max(np.abs(b.data))))
    return VerifyResult(
        passed=max_err <= bound,
        max_abs_error=max_err,
        bound=bound,
        worst_index=(i, j),
        observed=float(c.as_2d()[i, j]),
        expected=float(c_oracle.as_2d()[i, j]),
    )


# --- suite -----------------------------------------------------------------


@dataclass
class GemmConfig:
    sizes: list[int] = field(default_factory=lambda: list(DEFAULT_SIZES))
    repetitions: int = 5
    implementations: list[str] = field(default_factory=lambda: list(CPU_IMPLEMENTATIONS))
    skip_rules: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_SKIP_RULES))
    seed: int = DEFAULT_SEED
    tile: int = DEFAULT_TILE
    threads: int | None = None
    provider: str = "blas"
    verify_all: bool = False

    def validate(self):
        if not self.sizes:
            raise GemmConfigError("no sizes configured")
        for n in self.sizes:
            if n < 1 or (n & (n - 1)) != 0:
                raise GemmConfigError(f"sizes must be powers of two, got {n}")
        if self.repetitions < 1:
            raise GemmConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if not self.implementations:
            raise GemmConfigError("no implementations selected")


@dataclass
class GemmResult:
    implementation: str
    n: int
    times_s: list[float]
    gflops_best: float | None
    verified: bool | None  # None: not checked (skipped cell or n above cap)
    status: str = "ok"  # "ok" | "skipped(provider)" | "skipped(no-gpu)"

    @property
    def key(self) -> tuple[str, int]:
        return (self.implementation, self.n)

    def to_dict(self) -> dict:
        return {
            "implementation": self.implementation,
            "n": self.n,
            "times_s": list(self.times_s),
            "gflops_best": self.gflops_best,
            "verified": self.verified,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GemmResult":
        return cls(
            implementation=d["implementation"],
            n=d["n"],
            times_s=list(d["times_s"]),
            gflops_best=d["gflops_best"],
            verified=d["verified"],
            status=d.get("status", "ok"),
        )


def _runner_for(impl: str, config: GemmConfig):
    if impl == "naive":
        return lambda a, b, out: gemm_naive(a, b, out=out)
    if impl == "tiled":
        return lambda a, b, out: gemm_tiled(a, b, tile=config.tile, threads=config.threads, out=out)
    if impl == "blas":
        return lambda a, b, out: gemm_external(a, b, provider=config.provider, out=out)
    raise GemmConfigError(
        f"unknown implementation {impl!r}; valid: {', '.join(CPU_IMPLEMENTATIONS)}"
    )


class _NullMonitor:
    def begin(self, key):
        pass

    def end(self, key):
        pass


def run_gemm_suite(config: GemmConfig, monitor=None) -> list[GemmResult]:
    """Run every configured (implementation, size) cell not excluded by the
    skip rules.  Only the multiply call is timed (nanosecond clock); fresh
    seeded inputs per size; verification on the final output for n <= 1024
    unless verify_all lifts the cap.  A verification failure marks the cell
    and the suite continues."""
    config.validate()
    monitor = monitor or _NullMonitor()
    results: list[GemmResult] = []
    for n in config.sizes:
        active = [
            impl
            for impl in config.implementations
            if n <= config.skip_rules.get(impl, n)
        ]
        if not active:
            continue
        a = generate_matrix(n, config.seed)
        b = generate_matrix(n, config.seed + 1)
        oracle: MatrixF32 | None = None
        for impl in active:
            runner = _runner_for(impl, config)
            out = alloc_matrix(n)
            times: list[float] = []
            status = "ok"
            try:
                for rep in range(config.repetitions):
                    key = (impl, n, rep)
                    monitor.begin(key)
                    t0 = time.perf_counter_ns()
                    runner(a, b, out)
                    dt = (time.perf_counter_ns() - t0) / 1e9
                    monitor.end(key)
                    times.append(dt)
            except ProviderUnavailable:
                results.append(
                    GemmResult(impl, n, [], None, None, status="skipped(provider)")
                )
                continue
            verified: bool | None = None
            if config.verify_all or n <= VERIFY_MAX_N:
                if oracle is None:
                    # The naive cell's own output doubles as the oracle.
                    oracle = out if impl == "naive" else gemm_naive(a, b)
                verified = verify_gemm(out, oracle, a, b).passed
            results.append(
                GemmResult(
                    implementation=impl,
                    n=n,
                    times_s=times,
                    gflops_best=gflops_from_times(n, times),
                    verified=verified,
                    status=status,
                )
            )
    return results

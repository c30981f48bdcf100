"""GPU benchmark loops built on the dispatch primitives.

Mirrors the CPU suites: STREAM is best-of-N over full kernel sequences (one
untimed warm-up sequence absorbs pipeline compilation), GEMM cells are
verified against the CPU naive oracle for n <= 1024.
"""

import numpy as np

from unibench import gemm as gemm_core
from unibench import stream as stream_core
from unibench.gpu import runner
from unibench.report import GpuStreamResult
from unibench.stream import KERNELS

GPU_STREAM_REPS = 20


def _write_f32(ctx, buf, values: np.ndarray):
    runner.write_buffer(ctx, buf, np.ascontiguousarray(values, dtype=np.float32))


def _read_f32(ctx, buf, count: int) -> np.ndarray:
    raw = runner.read_buffer(ctx, buf, count * 4)
    return np.frombuffer(raw, dtype=np.float32, count=count).copy()


def run_gpu_stream_suite(
    ctx: runner.GpuContext,
    n_elements: int,
    q: float = 3.0,
    repetitions: int = GPU_STREAM_REPS,
    workgroup: tuple[int, int] = runner.DEFAULT_STREAM_WORKGROUP,
) -> GpuStreamResult:
    """Timed copy/scale/add/triad sequences over device buffers; reports
    best-of-N bandwidth per kernel plus an end-of-run validation."""
    nbytes = n_elements * 4
    a = runner.alloc_shared(ctx, nbytes)
    b = runner.alloc_shared(ctx, nbytes)
    c = runner.alloc_shared(ctx, nbytes)
    _write_f32(ctx, a, np.full(n_elements, 1.0, dtype=np.float32))
    _write_f32(ctx, b, np.full(n_elements, 2.0, dtype=np.float32))
    _write_f32(ctx, c, np.zeros(n_elements, dtype=np.float32))
    plan = runner.plan_for_stream(n_elements, workgroup)

    def sequence(record: dict | None):
        for kind in KERNELS:
            dt = runner.dispatch_stream(ctx, kind, a, b, c, n_elements, q, plan)
            if record is not None:
                record[kind].append(dt)

    sequence(None)  # warm-up: also one full kernel sequence
    times: dict[str, list[float]] = {k: [] for k in KERNELS}
    for _ in range(repetitions):
        sequence(times)

    entries = {
        kind: stream_core.summarize_times(kind, n_elements, 4, times[kind])
        for kind in KERNELS
    }
    observed = stream_core.StreamArrays(
        a=_read_f32(ctx, a, n_elements),
        b=_read_f32(ctx, b, n_elements),
        c=_read_f32(ctx, c, n_elements),
    )
    # The warm-up dispatches were one extra full sequence.
    validation = stream_core.validate_stream(observed, repetitions + 1, q)
    return GpuStreamResult(
        entries=entries, repetitions=repetitions, validation_passed=validation.passed
    )


def run_gpu_gemm_suite(
    ctx: runner.GpuContext,
    sizes: list[int],
    repetitions: int = 5,
    seed: int = gemm_core.DEFAULT_SEED,
    paper_grid: bool = False,
    workgroup: tuple[int, int] = runner.DEFAULT_GEMM_WORKGROUP,
    verify_all: bool = False,
    monitor=None,
) -> list[gemm_core.GemmResult]:
    """GPU naive and tiled GEMM cells for every size, verified against the
    CPU oracle up to the usual cap."""
    results: list[gemm_core.GemmResult] = []
    for n in sizes:
        a_m = gemm_core.generate_matrix(n, seed)
        b_m = gemm_core.generate_matrix(n, seed + 1)
        nbytes = n * n * 4
        a = runner.alloc_shared(ctx, nbytes)
        b = runner.alloc_shared(ctx, nbytes)
        c = runner.alloc_shared(ctx, nbytes)
        _write_f32(ctx, a, a_m.data)
        _write_f32(ctx, b, b_m.data)
        oracle: gemm_core.MatrixF32 | None = None
        for variant in ("naive", "tiled"):
            impl = f"gpu_{variant}"
            plan = runner.plan_for_gemm(n, variant, workgroup, paper_grid)
            runner.dispatch_gemm(ctx, variant, a, b, c, n, plan)  # warm-up
            times = []
            for rep in range(repetitions):
                key = (impl, n, rep)
                if monitor:
                    monitor.begin(key)
                times.append(runner.dispatch_gemm(ctx, variant, a, b, c, n, plan))
                if monitor:
                    monitor.end(key)
            verified = None
            if verify_all or n <= gemm_core.VERIFY_MAX_N:
                if oracle is None:
                    oracle = gemm_core.gemm_naive(a_m, b_m)
                out = gemm_core.alloc_matrix(n)
                out.data[:] = _read_f32(ctx, c, n * n)
                verified = gemm_core.verify_gemm(out, oracle, a_m, b_m).passed
            results.append(
                gemm_core.GemmResult(
                    implementation=impl,
                    n=n,
                    times_s=times,
                    gflops_best=gemm_core.gflops_from_times(n, times),
                    verified=verified,
                )
            )
    return results


def skipped_gemm_cells(sizes: list[int], reason: str = runner.SKIP_NO_GPU) -> list[gemm_core.GemmResult]:
    """Placeholder result cells for machines without a GPU backend."""
    return [
        gemm_core.GemmResult(
            implementation=f"gpu_{variant}",
            n=n,
            times_s=[],
            gflops_best=None,
            verified=None,
            status=reason,
        )
        for n in sizes
        for variant in ("naive", "tiled")
    ]

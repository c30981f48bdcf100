"""Portable GPU compute backend (WebGPU via the optional `wgpu` package).

Provides device setup, page-padded storage buffers, and timed dispatches of
the STREAM and GEMM compute shaders.  Everything degrades gracefully: a
missing `wgpu` install, a missing adapter, or missing shader sources raise
GpuUnavailable, which callers turn into "skipped(no-gpu)" result cells.

Timing is wall time from queue submission to the completion signal,
inclusive of queue latency (submit-then-wait).  WebGPU offers no portable
zero-copy host mapping of storage buffers, so buffers report
copy_mode="staged" and supports_unified_memory is False; a backend with
genuine unified-memory mapping would report "zero-copy".
"""

import os
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

from unibench.mem import round_up_pages
from unibench.stream import KERNELS

SKIP_NO_GPU = "skipped(no-gpu)"

SHADER_DIR_ENV = "UNIBENCH_SHADERS"

STREAM_ENTRIES = {k: f"stream_{k}" for k in KERNELS}
GEMM_ENTRIES = {"naive": "gemm_naive", "tiled": "gemm_tiled"}

ENTRY_FILES = {
    "stream_copy": "stream.wgsl",
    "stream_scale": "stream.wgsl",
    "stream_add": "stream.wgsl",
    "stream_triad": "stream.wgsl",
    "gemm_naive": "gemm_naive.wgsl",
    "gemm_tiled": "gemm_tiled.wgsl",
}

DEFAULT_STREAM_WORKGROUP = (256, 1)
DEFAULT_GEMM_WORKGROUP = (16, 16)
SHADER_TILE = 16  # fixed at shader-compile time in gemm_tiled.wgsl


class GpuUnavailable(RuntimeError):
    """No usable GPU backend; benchmarks should be marked skipped(no-gpu)."""


class GpuConfigError(ValueError):
    """A dispatch plan or buffer set cannot run the requested problem."""


def find_shader_dir(explicit: str | None = None) -> Path | None:
    """Locate the WGSL kernel sources (the frontend package ships them)."""
    candidates = []
    if explicit:
        candidates.append(Path(explicit))
    env = os.environ.get(SHADER_DIR_ENV)
    if env:
        candidates.append(Path(env))
    for base in (Path.cwd(), Path(__file__).resolve()):
        for parent in [base, *base.parents]:
            candidates.append(parent / "frontend" / "shaders")
    for cand in candidates:
        if (cand / "stream.wgsl").is_file():
            return cand
    return None


def load_shader_source(entry_point: str, shader_dir: Path) -> str:
    try:
        filename = ENTRY_FILES[entry_point]
    except KeyError:
        raise GpuConfigError(f"unknown shader entry point {entry_point!r}") from None
    path = Path(shader_dir) / filename
    if not path.is_file():
        raise GpuUnavailable(f"shader source missing: {path}")
    source = path.read_text()
    if f"fn {entry_point}" not in source:
        raise GpuUnavailable(f"{path} does not define entry point {entry_point!r}")
    return source


def pack_params(n: int, q: float = 0.0, tile: int = 0) -> bytes:
    """The 16-byte uniform parameter block shared by all kernels:
    u32 n | f32 q | u32 tile | u32 reserved (little-endian)."""
    return struct.pack("<IfII", n, q, tile, 0)


@dataclass
class DispatchPlan:
    workgroup_size: tuple[int, int]
    group_count: tuple[int, int]

    def covers(self, nx: int, ny: int) -> bool:
        return (
            self.workgroup_size[0] * self.group_count[0] >= nx
            and self.workgroup_size[1] * self.group_count[1] >= ny
        )

    def validate_covers(self, nx: int, ny: int):
        if not self.covers(nx, ny):
            raise GpuConfigError(
                f"plan {self.workgroup_size}x{self.group_count} does not cover "
                f"a {nx}x{ny} domain"
            )


def plan_for_stream(n: int, workgroup: tuple[int, int] = DEFAULT_STREAM_WORKGROUP) -> DispatchPlan:
    wx = workgroup[0]
    return DispatchPlan(workgroup_size=(wx, 1), group_count=(-(-n // wx), 1))


def plan_for_gemm(
    n: int,
    variant: str = "naive",
    workgroup: tuple[int, int] = DEFAULT_GEMM_WORKGROUP,
    paper_grid: bool = False,
) -> DispatchPlan:
    """Default plan: the workgroup tiles the n x n output exactly.  The
    opt-in compatibility plan reproduces the fixed 8x8 group count instead
    (workgroups sized to cover n/8 each)."""
    if variant == "tiled":
        workgroup = (SHADER_TILE, SHADER_TILE)
    if paper_grid:
        wx, wy = -(-n // 8), -(-n // 8)
        return DispatchPlan(workgroup_size=(wx, wy), group_count=(8, 8))
    wx, wy = workgroup
    return DispatchPlan(
        workgroup_size=(wx, wy), group_count=(-(-n // wx), -(-n // wy))
    )


@dataclass
class GpuContext:
    adapter_name: str
    supports_unified_memory: bool
    max_workgroup_dims: tuple[int, int]
    device: object
    queue: object
    shader_dir: Path
    _pipelines: dict = field(default_factory=dict)
    _fence: object = None

    def release(self):
        global _active_context
        _active_context = None
        try:
            self.device.destroy()
        except Exception:
            pass


# One context per process in v1; init_gpu hands back the live one.
_active_context: GpuContext | None = None


def _limit(limits, *names, default=0) -> int:
    for name in names:
        if isinstance(limits, dict) and name in limits:
            return int(limits[name])
        value = getattr(limits, name, None)
        if value is not None:
            return int(value)
    return default


def init_gpu(shader_dir: str | None = None) -> GpuContext:
    """Set up the adapter, device, and queue; raises GpuUnavailable when no
    compute-capable backend exists on this machine.  Returns the existing
    context if one is already live (one context per process)."""
    global _active_context
    if _active_context is not None:
        return _active_context
    found = find_shader_dir(shader_dir)
    if found is None:
        raise GpuUnavailable("no-gpu: WGSL kernel sources not found (set UNIBENCH_SHADERS)")
    try:
        import wgpu
    except ImportError as exc:
        raise GpuUnavailable(f"no-gpu: wgpu not installed ({exc})") from exc
    try:
        adapter = wgpu.gpu.request_adapter_sync(power_preference="high-performance")
    except Exception as exc:
        raise GpuUnavailable(f"no-gpu: no adapter ({exc})") from exc
    if adapter is None:
        raise GpuUnavailable("no-gpu: no adapter")
    try:
        device = adapter.request_device_sync()
    except Exception as exc:
        raise GpuUnavailable(f"no-gpu: device request failed ({exc})") from exc
    limits = getattr(device, "limits", {}) or {}
    max_dims = (
        _limit(limits, "max-compute-workgroup-size-x", "max_compute_workgroup_size_x", default=256),
        _limit(limits, "max-compute-workgroup-size-y", "max_compute_workgroup_size_y", default=256),
    )
    if max_dims[0] < 16 or max_dims[1] < 16:
        raise GpuUnavailable(
            f"no-gpu: compute workgroup limits {max_dims} below the required (16, 16)"
        )
    info = getattr(adapter, "info", None) or {}
    if isinstance(info, dict):
        name = info.get("device") or info.get("description") or ""
    else:
        name = getattr(info, "device", "") or str(info)
    _active_context = GpuContext(
        adapter_name=name or "unknown adapter",
        supports_unified_memory=False,  # not expressible in portable WebGPU
        max_workgroup_dims=max_dims,
        device=device,
        queue=device.queue,
        shader_dir=found,
    )
    return _active_context


@dataclass
class SharedBuffer:
    """Device storage buffer padded to whole 16,384-byte pages.

    copy_mode records whether host access goes through staging copies
    ("staged") or a genuine unified mapping ("zero-copy"); explicit copies
    are counted so a zero-copy run can assert it performed none.
    """

    byte_length: int
    handle: object
    copy_mode: str = "staged"
    explicit_copies: int = 0


def alloc_shared(ctx: GpuContext, nbytes: int) -> SharedBuffer:
    if nbytes <= 0:
        raise GpuConfigError(f"buffer size must be > 0, got {nbytes}")
    import wgpu

    size = round_up_pages(nbytes)
    buf = ctx.device.create_buffer(
        size=size,
        usage=wgpu.BufferUsage.STORAGE | wgpu.BufferUsage.COPY_SRC | wgpu.BufferUsage.COPY_DST,
    )
    # create_buffer zero-initializes per the WebGPU spec.
    return SharedBuffer(byte_length=size, handle=buf)


def write_buffer(ctx: GpuContext, buf: SharedBuffer, data) -> None:
    ctx.queue.write_buffer(buf.handle, 0, data)
    buf.explicit_copies += 1


def read_buffer(ctx: GpuContext, buf: SharedBuffer, nbytes: int | None = None) -> memoryview:
    out = ctx.queue.read_buffer(buf.handle, 0, size=nbytes or buf.byte_length)
    buf.explicit_copies += 1
    return memoryview(out)


def retarget_workgroup(source: str, workgroup: tuple[int, int]) -> str:
    """Rewrite the shader's compile-time workgroup constant.  The stream and
    naive-GEMM sources declare it as `const WG: u32 = <default>u;`; the tiled
    shader's TILE is load-bearing (local memory sizing) and is never changed."""
    import re as _re

    return _re.sub(r"const WG: u32 = \d+u;", f"const WG: u32 = {workgroup[0]}u;", source)


def _pipeline(ctx: GpuContext, entry_point: str, workgroup: tuple[int, int] | None = None):
    key = (entry_point, workgroup)
    pipe = ctx._pipelines.get(key)
    if pipe is None:
        source = load_shader_source(entry_point, ctx.shader_dir)
        if workgroup is not None:
            source = retarget_workgroup(source, workgroup)
        module = ctx.device.create_shader_module(code=source)
        pipe = ctx.device.create_compute_pipeline(
            layout="auto", compute={"module": module, "entry_point": entry_point}
        )
        ctx._pipelines[key] = pipe
    return pipe


def _bind(ctx: GpuContext, pipeline, buffers: list[SharedBuffer], params: bytes):
    import wgpu

    ubuf = ctx.device.create_buffer(
        size=len(params), usage=wgpu.BufferUsage.UNIFORM | wgpu.BufferUsage.COPY_DST
    )
    ctx.queue.write_buffer(ubuf, 0, params)
    entries = [
        {"binding": i, "resource": {"buffer": b.handle, "offset": 0, "size": b.byte_length}}
        for i, b in enumerate(buffers)
    ]
    entries.append(
        {"binding": len(buffers), "resource": {"buffer": ubuf, "offset": 0, "size": len(params)}}
    )
    return ctx.device.create_bind_group(
        layout=pipeline.get_bind_group_layout(0), entries=entries
    )


def _wait_done(ctx: GpuContext):
    done = getattr(ctx.queue, "on_submitted_work_done_sync", None)
    if done is not None:
        done()
        return
    # Fallback completion fence: a blocking read forces the queue to drain.
    ctx.queue.read_buffer(ctx._fence, 0, size=4)


def _ensure_fence(ctx: GpuContext):
    if ctx._fence is None:
        import wgpu

        ctx._fence = ctx.device.create_buffer(
            size=4, usage=wgpu.BufferUsage.COPY_SRC | wgpu.BufferUsage.COPY_DST
        )


def _submit_timed(ctx: GpuContext, pipeline, bind_group, plan: DispatchPlan) -> float:
    _ensure_fence(ctx)
    encoder = ctx.device.create_command_encoder()
    cpass = encoder.begin_compute_pass()
    cpass.set_pipeline(pipeline)
    cpass.set_bind_group(0, bind_group)
    cpass.dispatch_workgroups(plan.group_count[0], plan.group_count[1], 1)
    cpass.end()
    cmd = encoder.finish()
    t0 = time.perf_counter_ns()
    ctx.queue.submit([cmd])
    _wait_done(ctx)
    return (time.perf_counter_ns() - t0) / 1e9


def dispatch_stream(
    ctx: GpuContext,
    kind: str,
    a: SharedBuffer,
    b: SharedBuffer,
    c: SharedBuffer,
    n: int,
    q: float,
    plan: DispatchPlan | None = None,
) -> float:
    """Run one STREAM kernel over n elements; returns submit-to-completion
    seconds.  Array semantics match the CPU kernels exactly."""
    if kind not in KERNELS:
        raise GpuConfigError(f"unknown stream kernel {kind!r}")
    for buf in (a, b, c):
        if buf.byte_length < n * 4:
            raise GpuConfigError(f"buffer of {buf.byte_length} bytes too small for n={n}")
    plan = plan or plan_for_stream(n)
    plan.validate_covers(n, 1)
    _check_workgroup_limits(ctx, plan)
    wg = plan.workgroup_size if plan.workgroup_size != DEFAULT_STREAM_WORKGROUP else None
    pipeline = _pipeline(ctx, STREAM_ENTRIES[kind], wg)
    bind_group = _bind(ctx, pipeline, [a, b, c], pack_params(n, q=q))
    return _submit_timed(ctx, pipeline, bind_group, plan)


def dispatch_gemm(
    ctx: GpuContext,
    variant: str,
    a: SharedBuffer,
    b: SharedBuffer,
    c: SharedBuffer,
    n: int,
    plan: DispatchPlan | None = None,
) -> float:
    """Run one GEMM shader over n x n row-major FP32 matrices; returns
    submit-to-completion seconds."""
    if variant not in GEMM_ENTRIES:
        raise GpuConfigError(f"unknown gemm variant {variant!r}; expected naive or tiled")
    needed = n * n * 4
    for buf in (a, b, c):
        if buf.byte_length < needed:
            raise GpuConfigError(f"buffer of {buf.byte_length} bytes too small for n={n}")
    plan = plan or plan_for_gemm(n, variant)
    plan.validate_covers(n, n)
    _check_workgroup_limits(ctx, plan)
    if variant == "tiled" and plan.workgroup_size != (SHADER_TILE, SHADER_TILE):
        raise GpuConfigError(
            f"tiled shader requires workgroup {(SHADER_TILE, SHADER_TILE)}, got {plan.workgroup_size}"
        )
    wg = plan.workgroup_size if plan.workgroup_size != DEFAULT_GEMM_WORKGROUP else None
    pipeline = _pipeline(ctx, GEMM_ENTRIES[variant], None if variant == "tiled" else wg)
    bind_group = _bind(ctx, pipeline, [a, b, c], pack_params(n, tile=SHADER_TILE))
    return _submit_timed(ctx, pipeline, bind_group, plan)


def _check_workgroup_limits(ctx: GpuContext, plan: DispatchPlan):
    wx, wy = plan.workgroup_size
    mx, my = ctx.max_workgroup_dims
    if wx > mx or wy > my:
        raise GpuConfigError(
            f"workgroup {plan.workgroup_size} exceeds device limits {ctx.max_workgroup_dims}"
        )

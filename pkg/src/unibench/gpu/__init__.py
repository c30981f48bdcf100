from unibench.gpu.runner import (  # noqa: F401
    DispatchPlan,
    GpuConfigError,
    GpuContext,
    GpuUnavailable,
    SharedBuffer,
    alloc_shared,
    dispatch_gemm,
    dispatch_stream,
    find_shader_dir,
    init_gpu,
)

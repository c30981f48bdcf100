"""Command-line surface: run benchmarks, manage the catalog, build reports.

Subcommands: stream, gemm, all, report, catalog.  Runs always write exactly
one timestamped archive (never overwriting an earlier one) and exit 0 even
when components are skipped; verification failures exit 1, configuration
errors exit 2.
"""

import argparse
import datetime as _dt
import json
import os
import platform
import shutil
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

from unibench import gemm as gemm_mod
from unibench import power as power_mod
from unibench import report as report_mod
from unibench import stream as stream_mod
from unibench.devices import CatalogError, load_catalog
from unibench.gemm import GemmConfig, GemmConfigError
from unibench.stream import StreamConfig, StreamConfigError

GPU_IMPLEMENTATIONS = ("gpu_naive", "gpu_tiled")
ALL_IMPLEMENTATIONS = gemm_mod.CPU_IMPLEMENTATIONS + GPU_IMPLEMENTATIONS

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class RunConfig:
    out_dir: Path
    chip_id: str
    machine: report_mod.MachineInfo
    stream: StreamConfig | None = None
    gemm: GemmConfig | None = None
    gpu_impls: list[str] = field(default_factory=list)
    gpu_workgroup: tuple[int, int] = (16, 16)
    gpu_stream_workgroup: tuple[int, int] = (256, 1)
    paper_grid: bool = False
    gpu_reps: int = 20
    shader_dir: str | None = None
    sampler: power_mod.SamplerConfig | None = None
    keep_awake: bool = False
    dry_run: bool = False

    def describe(self) -> dict:
        return {
            "out_dir": str(self.out_dir),
            "chip_id": self.chip_id,
            "stream": None if self.stream is None else vars(self.stream).copy(),
            "gemm": None if self.gemm is None else vars(self.gemm).copy(),
            "gpu_impls": list(self.gpu_impls),
            "gpu_workgroup": list(self.gpu_workgroup),
            "paper_grid": self.paper_grid,
            "gpu_reps": self.gpu_reps,
            "shader_dir": self.shader_dir,
            "power": None if self.sampler is None else {
                "command_template": self.sampler.command_template,
                "warmup_s": self.sampler.warmup_s,
                "enabled": self.sampler.enabled,
                "boundary_signal": self.sampler.boundary_signal,
            },
            "keep_awake": self.keep_awake,
            "dry_run": self.dry_run,
        }


def detect_chip_id() -> str:
    if sys.platform == "darwin":
        try:
            brand = subprocess.run(
                ["sysctl", "-n", "machdep.cpu.brand_string"],
                capture_output=True, text=True, timeout=5,
            ).stdout.strip()
            for token in brand.replace("Apple", "").split():
                if token.startswith("M") and token[1:].isdigit():
                    return token
        except (OSError, subprocess.SubprocessError):
            pass
    return "unknown"


def _machine_info(chip_id: str, extra: dict) -> report_mod.MachineInfo:
    try:
        mem_gb = os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES") / 2**30
        memory = f"{mem_gb:.0f}GB"
    except (ValueError, OSError, AttributeError):
        memory = ""
    return report_mod.MachineInfo(
        chip_id=chip_id,
        device=extra.get("device", platform.node()),
        memory=extra.get("memory", memory),
        cooling=extra.get("cooling", ""),
        os=extra.get("os", platform.platform()),
    )


def _parse_wh(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return (int(w), int(h))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from exc


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unibench",
        description="STREAM, GEMM, and power-efficiency benchmarks for unified-memory machines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--out", default="runs", help="output directory for archives")
        p.add_argument("--config", help="JSON file with defaults for these flags")
        p.add_argument("--chip", help="chip id for catalog lookups (default: autodetect)")
        p.add_argument("--power", action=argparse.BooleanOptionalAction, default=False,
                       help="wrap each repetition in power-sampler windows")
        p.add_argument("--power-command", default=power_mod.DEFAULT_COMMAND_TEMPLATE,
                       help="sampler command template ({output} placeholder)")
        p.add_argument("--power-warmup", type=float, default=power_mod.DEFAULT_WARMUP_S,
                       help="sampler warm-up seconds before the first window")
        p.add_argument("--keep-awake", action="store_true",
                       help="best-effort: hold the machine awake via the OS tool")
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved configuration and do nothing")

    def add_stream_flags(p):
        p.add_argument("--stream-n", type=int, help="elements per array (default sized from RAM)")
        p.add_argument("--stream-reps", type=int, default=10)
        p.add_argument("--elem-bytes", type=int, choices=(4, 8), default=4)
        p.add_argument("--cache-hint", type=int, default=stream_mod.DEFAULT_CACHE_HINT,
                       help="last-level cache size in bytes for the working-set check")

    def add_gemm_flags(p):
        p.add_argument("--sizes", type=_parse_int_list,
                       help=f"comma-separated matrix sizes (default {gemm_mod.DEFAULT_SIZES})")
        p.add_argument("--impls", help=f"comma-separated from: {', '.join(ALL_IMPLEMENTATIONS)}")
        p.add_argument("--reps", type=int, default=5)
        p.add_argument("--tile", type=int, default=gemm_mod.DEFAULT_TILE)
        p.add_argument("--seed", type=int, default=gemm_mod.DEFAULT_SEED)
        p.add_argument("--verify-all", action="store_true",
                       help="verify every size, not only n <= 1024")
        p.add_argument("--provider", default="blas",
                       help="external GEMM provider name, or 'none'")

    def add_gpu_flags(p):
        p.add_argument("--gpu-workgroup", type=_parse_wh, default=(16, 16),
                       help="GEMM workgroup size WxH (default 16x16)")
        p.add_argument("--paper-grid", action="store_true",
                       help="compatibility plan: fixed 8x8 workgroup grid")
        p.add_argument("--gpu-reps", type=int, default=20,
                       help="GPU STREAM repetitions (default 20)")
        p.add_argument("--shader-dir", help="directory holding the WGSL kernels")

    for name, helptext in (
        ("stream", "memory-bandwidth suite (CPU always, GPU when available)"),
        ("gemm", "matrix-multiply suite with optional power monitoring"),
        ("all", "stream then gemm into one archive"),
    ):
        p = sub.add_parser(name, help=helptext)
        add_run_flags(p)
        add_gpu_flags(p)
        if name in ("stream", "all"):
            add_stream_flags(p)
        if name in ("gemm", "all"):
            add_gemm_flags(p)

    p = sub.add_parser("report", help="build an efficiency report from an archive")
    p.add_argument("--in", dest="archive", required=True, help="archive JSON path")
    p.add_argument("--catalog", default="default", help="catalog path or 'default'")
    p.add_argument("--use-min-peak", action="store_true",
                   help="use the low end of ranged catalog peaks")
    p.add_argument("--plots", help="directory for plot data files (default: none)")

    p = sub.add_parser("catalog", help="list or validate device specifications")
    p.add_argument("--catalog", default="default", help="catalog path or 'default'")

    return parser


def _resolve_run_config(args) -> RunConfig:
    file_cfg = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise StreamConfigError(f"config file not found: {path}")
        file_cfg = json.loads(path.read_text())

    chip = args.chip or file_cfg.get("chip") or detect_chip_id()
    out_dir = Path(args.out if args.out != "runs" else file_cfg.get("out", args.out))

    stream_cfg = None
    if args.command in ("stream", "all"):
        n = args.stream_n or file_cfg.get("stream_n") or stream_mod._default_n_elements()
        stream_cfg = StreamConfig(
            n_elements=n,
            elem_bytes=args.elem_bytes,
            repetitions=args.stream_reps,
            cache_size_hint=args.cache_hint,
        )

    gemm_cfg = None
    gpu_impls: list[str] = []
    if args.command in ("gemm", "all"):
        impls_text = args.impls or file_cfg.get("impls") or ",".join(ALL_IMPLEMENTATIONS)
        impls = [i.strip() for i in impls_text.split(",") if i.strip()]
        unknown = [i for i in impls if i not in ALL_IMPLEMENTATIONS]
        if unknown:
            raise GemmConfigError(
                f"unknown implementation {unknown[0]!r}; valid names: "
                f"{', '.join(ALL_IMPLEMENTATIONS)}"
            )
        gpu_impls = [i for i in impls if i in GPU_IMPLEMENTATIONS]
        cpu_impls = [i for i in impls if i not in GPU_IMPLEMENTATIONS]
        gemm_cfg = GemmConfig(
            sizes=args.sizes or file_cfg.get("sizes") or list(gemm_mod.DEFAULT_SIZES),
            repetitions=args.reps,
            implementations=cpu_impls,
            seed=args.seed,
            tile=args.tile,
            provider=args.provider,
            verify_all=args.verify_all,
        )
    elif args.command == "stream":
        gpu_impls = []

    sampler = None
    if getattr(args, "power", False):
        sampler = power_mod.SamplerConfig(
            command_template=args.power_command,
            warmup_s=args.power_warmup,
            output_path="",  # filled once the archive path is known
            enabled=True,
        )

    return RunConfig(
        out_dir=out_dir,
        chip_id=chip,
        machine=_machine_info(chip, file_cfg),
        stream=stream_cfg,
        gemm=gemm_cfg,
        gpu_impls=gpu_impls,
        gpu_workgroup=args.gpu_workgroup,
        paper_grid=args.paper_grid,
        gpu_reps=args.gpu_reps,
        shader_dir=args.shader_dir,
        sampler=sampler,
        keep_awake=args.keep_awake,
        dry_run=args.dry_run,
    )


def _archive_path(out_dir: Path) -> Path:
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
    path = out_dir / f"run-{stamp}.json"
    counter = 2
    while path.exists():
        path = out_dir / f"run-{stamp}-{counter}.json"
        counter += 1
    return path


class _KeepAwake:
    def __init__(self, enabled: bool):
        self.proc = None
        if enabled and shutil.which("caffeinate"):
            try:
                self.proc = subprocess.Popen(
                    ["caffeinate", "-dims"], stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL
                )
            except OSError:
                self.proc = None

    def release(self):
        if self.proc is not None:
            self.proc.terminate()


def _run_benchmarks(config: RunConfig) -> tuple[report_mod.RunArchive, Path, int]:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(config.out_dir, os.W_OK):
        raise StreamConfigError(f"output directory not writable: {config.out_dir}")
    archive_path = _archive_path(config.out_dir)
    notes: dict[str, str] = {}
    awake = _KeepAwake(config.keep_awake)

    monitor = None
    if config.sampler is not None:
        config.sampler.output_path = str(archive_path.with_suffix(".power.txt"))
        monitor = power_mod.PowerMonitor(config.sampler).start()
        if not monitor.enabled:
            notes["power"] = f"unavailable: {monitor.disabled_reason}"

    gpu_ctx = None
    gpu_reason = None
    wants_gpu = bool(config.gpu_impls) or config.stream is not None
    if wants_gpu:
        from unibench.gpu import runner as gpu_runner

        try:
            gpu_ctx = gpu_runner.init_gpu(config.shader_dir)
        except gpu_runner.GpuUnavailable as exc:
            gpu_reason = gpu_runner.SKIP_NO_GPU
            notes["gpu"] = str(exc)

    stream_cpu = None
    stream_gpu = None
    if config.stream is not None:
        stream_cpu = stream_mod.run_stream_suite(config.stream)
        if gpu_ctx is not None:
            from unibench.gpu import suite as gpu_suite

            stream_gpu = gpu_suite.run_gpu_stream_suite(
                gpu_ctx,
                config.stream.n_elements,
                config.stream.scalar_q,
                repetitions=config.gpu_reps,
                workgroup=config.gpu_stream_workgroup,
            )
        else:
            stream_gpu = report_mod.GpuStreamResult(skipped_reason=gpu_reason)

    gemm_results: list[gemm_mod.GemmResult] = []
    if config.gemm is not None:
        gemm_results.extend(gemm_mod.run_gemm_suite(config.gemm, monitor))
        if config.gpu_impls:
            from unibench.gpu import suite as gpu_suite

            if gpu_ctx is not None:
                variants = [i.removeprefix("gpu_") for i in config.gpu_impls]
                all_gpu = gpu_suite.run_gpu_gemm_suite(
                    gpu_ctx,
                    config.gemm.sizes,
                    repetitions=config.gemm.repetitions,
                    seed=config.gemm.seed,
                    paper_grid=config.paper_grid,
                    workgroup=config.gpu_workgroup,
                    verify_all=config.gemm.verify_all,
                    monitor=monitor,
                )
                gemm_results.extend(r for r in all_gpu if r.implementation in config.gpu_impls)
            else:
                cells = gpu_suite.skipped_gemm_cells(config.gemm.sizes)
                gemm_results.extend(c for c in cells if c.implementation in config.gpu_impls)

    energy: list[power_mod.EnergyRecord] = []
    if monitor is not None:
        monitor.stop()
        gflops_by_key = {}
        for r in gemm_results:
            for rep, t in enumerate(r.times_s):
                if t > 0:
                    gflops_by_key[(r.implementation, r.n, rep)] = (
                        gemm_mod.gemm_flops(r.n) / t / 1e9
                    )
        energy = monitor.energy_records(gflops_by_key)
        if monitor.enabled and not energy:
            notes.setdefault("power", "no windows captured")

    awake.release()

    archive = report_mod.RunArchive(
        machine=config.machine,
        stream_cpu=stream_cpu,
        stream_gpu=stream_gpu,
        gemm=gemm_results,
        energy=energy,
        created=_dt.datetime.now().isoformat(timespec="seconds"),
        notes=notes,
    )
    report_mod.persist(archive, archive_path)

    failed = [r for r in gemm_results if r.verified is False]
    if stream_cpu is not None and not stream_cpu.validation_passed:
        failed.append("stream")
    status = EXIT_VERIFY_FAILED if failed else EXIT_OK
    return archive, archive_path, status


def _cmd_run(args) -> int:
    config = _resolve_run_config(args)
    if config.gemm is None and config.stream is None:
        print("error: no benchmark selected", file=sys.stderr)
        return EXIT_CONFIG
    if config.dry_run:
        print(json.dumps(config.describe(), indent=2, sort_keys=True, default=str))
        return EXIT_OK
    archive, path, status = _run_benchmarks(config)
    print(f"archive written: {path}")
    skipped = [r.implementation for r in archive.gemm if r.status != "ok"]
    if skipped:
        print(f"skipped cells: {', '.join(sorted(set(skipped)))}")
    if status == EXIT_VERIFY_FAILED:
        print("VERIFICATION FAILED for at least one cell", file=sys.stderr)
    return status


def _fmt_ratio(value: float | None) -> str:
    return "unavailable" if value is None else f"{value * 100:.1f}%"


def _cmd_report(args) -> int:
    try:
        archive = report_mod.load(args.archive)
        catalog = load_catalog(args.catalog)
    except (report_mod.ArchiveError, CatalogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rep = report_mod.build_efficiency_report(archive, catalog, use_min_peak=args.use_min_peak)
    print(f"chip: {rep.chip_id}")
    print(f"theoretical bandwidth: {rep.peak_bandwidth_gbs or 'unavailable'} GB/s")
    print("bandwidth (best of sweep):")
    for kernel, cell in rep.bandwidth.items():
        cpu = f"{cell.cpu_gbs:.2f} GB/s ({_fmt_ratio(cell.cpu_ratio)})" if cell.cpu_gbs else "-"
        gpu = f"{cell.gpu_gbs:.2f} GB/s ({_fmt_ratio(cell.gpu_ratio)})" if cell.gpu_gbs else "-"
        print(f"  {kernel:<6} cpu {cpu}  gpu {gpu}")
    if rep.compute_headline:
        print("compute headline (GFLOPS, best size):")
        for impl, (gflops, n) in sorted(rep.compute_headline.items()):
            ratio = _fmt_ratio(rep.fp32_ratio.get(impl))
            print(f"  {impl:<10} {gflops:10.2f} at n={n}  ({ratio} of FP32 peak)")
    if rep.efficiency_headline:
        print("efficiency headline (GFLOPS/W):")
        for impl, value in sorted(rep.efficiency_headline.items()):
            print(f"  {impl:<10} {value:10.2f}")
    if args.plots:
        plots = Path(args.plots)
        plots.mkdir(parents=True, exist_ok=True)
        for kind in report_mod.PLOT_KINDS:
            out = report_mod.emit_plot_data(rep, kind, plots / f"{kind}.tsv")
            print(f"plot data: {out}")
    return EXIT_OK


def _cmd_catalog(args) -> int:
    try:
        catalog = load_catalog(args.catalog)
    except CatalogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"catalog: {catalog.source_path} ({len(catalog.entries)} chips)")
    for chip_id, spec in catalog.entries.items():
        lo, hi = spec.theoretical_fp32_tflops
        tflops = f"{lo}" if lo == hi else f"{lo}-{hi}"
        print(
            f"  {chip_id:<8} {spec.mem_bandwidth_gbs:6.1f} GB/s  {tflops} TFLOPS  "
            f"{spec.perf_cores}P+{spec.eff_cores}E cores  {spec.mem_technology}"
        )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("stream", "gemm", "all"):
            return _cmd_run(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "catalog":
            return _cmd_catalog(args)
    except (StreamConfigError, GemmConfigError, CatalogError, report_mod.ArchiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

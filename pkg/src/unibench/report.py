"""Result archive and efficiency reporting.

An archive is one run's results (machine descriptor, STREAM, GEMM, energy
records) persisted as versioned JSON.  Reports join an archive with the
device catalog to produce measured-vs-theoretical ratios and GFLOPS-per-watt
tables, plus tab-separated plot data (one file per figure kind).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from unibench.devices import Catalog, efficiency_ratio
from unibench.gemm import GemmResult
from unibench.power import EnergyRecord
from unibench.stream import KERNELS, KernelTiming, StreamResult

SCHEMA_VERSION = 1

PLOT_KINDS = ("bandwidth", "gflops", "power", "efficiency")

UNAVAILABLE = "unavailable"


class ArchiveError(ValueError):
    pass


@dataclass
class MachineInfo:
    """Free-text machine descriptor (the fields cooling etc. cannot be
    autodetected, so they are user-supplied configuration)."""

    chip_id: str
    device: str = ""
    memory: str = ""
    cooling: str = ""
    os: str = ""

    def to_dict(self) -> dict:
        return {
            "chip_id": self.chip_id,
            "device": self.device,
            "memory": self.memory,
            "cooling": self.cooling,
            "os": self.os,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MachineInfo":
        return cls(
            chip_id=d["chip_id"],
            device=d.get("device", ""),
            memory=d.get("memory", ""),
            cooling=d.get("cooling", ""),
            os=d.get("os", ""),
        )


@dataclass
class GpuStreamResult:
    """GPU STREAM outcome: per-kernel best-of-N timings, or a skip reason."""

    entries: dict[str, KernelTiming] = field(default_factory=dict)
    repetitions: int = 0
    validation_passed: bool | None = None
    skipped_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "entries": {k: t.to_dict() for k, t in self.entries.items()},
            "repetitions": self.repetitions,
            "validation_passed": self.validation_passed,
            "skipped_reason": self.skipped_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GpuStreamResult":
        return cls(
            entries={k: KernelTiming.from_dict(t) for k, t in d["entries"].items()},
            repetitions=d["repetitions"],
            validation_passed=d.get("validation_passed"),
            skipped_reason=d.get("skipped_reason"),
        )


@dataclass
class RunArchive:
    machine: MachineInfo
    stream_cpu: StreamResult | None = None
    stream_gpu: GpuStreamResult | None = None
    gemm: list[GemmResult] = field(default_factory=list)
    energy: list[EnergyRecord] = field(default_factory=list)
    created: str = ""
    notes: dict[str, str] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def validate(self):
        if not self.machine.chip_id:
            raise ArchiveError("archive is missing a chip_id")
        keys = [r.key for r in self.gemm]
        if len(keys) != len(set(keys)):
            dupes = sorted({k for k in keys if keys.count(k) > 1})
            raise ArchiveError(f"duplicate gemm result keys: {dupes}")

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "machine": self.machine.to_dict(),
            "stream_cpu": self.stream_cpu.to_dict() if self.stream_cpu else None,
            "stream_gpu": self.stream_gpu.to_dict() if self.stream_gpu else None,
            "gemm": [r.to_dict() for r in self.gemm],
            "energy": [r.to_dict() for r in self.energy],
            "created": self.created,
            "notes": dict(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunArchive":
        if "schema_version" not in d:
            raise ArchiveError("not an archive: schema_version missing")
        version = d["schema_version"]
        if version != SCHEMA_VERSION:
            raise ArchiveError(
                f"unsupported schema_version {version!r} (this build reads {SCHEMA_VERSION})"
            )
        if "machine" not in d or "chip_id" not in d["machine"]:
            raise ArchiveError("archive is missing a chip_id")
        archive = cls(
            machine=MachineInfo.from_dict(d["machine"]),
            stream_cpu=StreamResult.from_dict(d["stream_cpu"]) if d.get("stream_cpu") else None,
            stream_gpu=GpuStreamResult.from_dict(d["stream_gpu"]) if d.get("stream_gpu") else None,
            gemm=[GemmResult.from_dict(r) for r in d.get("gemm", [])],
            energy=[EnergyRecord.from_dict(r) for r in d.get("energy", [])],
            created=d.get("created", ""),
            notes=dict(d.get("notes", {})),
            schema_version=version,
        )
        archive.validate()
        return archive


def persist(archive: RunArchive, path: str | Path) -> Path:
    """Write the archive as deterministic JSON; load(persist(x)) == x."""
    archive.validate()
    path = Path(path)
    path.write_text(json.dumps(archive.to_dict(), sort_keys=True, indent=2) + "\n")
    return path


def load(path: str | Path) -> RunArchive:
    path = Path(path)
    if not path.is_file():
        raise ArchiveError(f"archive not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"{path}: not valid JSON: {exc}") from exc
    return RunArchive.from_dict(data)


# --- efficiency report -------------------------------------------------------


@dataclass
class BandwidthCell:
    cpu_gbs: float | None
    gpu_gbs: float | None
    cpu_ratio: float | None
    gpu_ratio: float | None


@dataclass
class EfficiencyReport:
    chip_id: str
    peak_bandwidth_gbs: float | None
    peak_fp32_gflops: float | None
    bandwidth: dict[str, BandwidthCell]
    compute_gflops: dict[str, dict[int, float]]
    compute_headline: dict[str, tuple[float, int]]
    fp32_ratio: dict[str, float | None]
    power_w: dict[tuple[str, int], float]
    efficiency_gflops_per_w: dict[tuple[str, int], float]
    efficiency_headline: dict[str, float]


def build_efficiency_report(archive: RunArchive, catalog: Catalog, use_min_peak: bool = False) -> EfficiencyReport:
    """Join an archive with the catalog.

    Ratios use the chip's catalog peaks (fp32 max of the range unless
    use_min_peak).  Headline figures are maxima across sizes, matching the
    best-of-N reporting convention.  An unknown chip produces a report with
    every ratio marked unavailable (None) rather than an error.
    """
    archive.validate()
    spec = catalog.get(archive.machine.chip_id)
    peak_bw = spec.mem_bandwidth_gbs if spec else None
    peak_gflops = spec.fp32_peak_gflops(use_min=use_min_peak) if spec else None

    bandwidth: dict[str, BandwidthCell] = {}
    for kernel in KERNELS:
        cpu = gpu = None
        if archive.stream_cpu is not None:
            try:
                cpu = archive.stream_cpu.best(kernel)[0]
            except KeyError:
                pass
        if archive.stream_gpu is not None and kernel in archive.stream_gpu.entries:
            gpu = archive.stream_gpu.entries[kernel].best_bandwidth_gbs
        bandwidth[kernel] = BandwidthCell(
            cpu_gbs=cpu,
            gpu_gbs=gpu,
            cpu_ratio=efficiency_ratio(cpu, peak_bw) if (cpu is not None and peak_bw) else None,
            gpu_ratio=efficiency_ratio(gpu, peak_bw) if (gpu is not None and peak_bw) else None,
        )

    compute: dict[str, dict[int, float]] = {}
    for r in archive.gemm:
        if r.status != "ok" or r.gflops_best is None:
            continue
        compute.setdefault(r.implementation, {})[r.n] = r.gflops_best
    headline = {
        impl: max((g, n) for n, g in cells.items()) for impl, cells in compute.items()
    }
    fp32_ratio = {
        impl: (efficiency_ratio(g, peak_gflops) if peak_gflops else None)
        for impl, (g, _n) in headline.items()
    }

    power_w: dict[tuple[str, int], float] = {}
    eff: dict[tuple[str, int], float] = {}
    by_cell: dict[tuple[str, int], list[EnergyRecord]] = {}
    for rec in archive.energy:
        by_cell.setdefault((rec.implementation, rec.n), []).append(rec)
    for cell, recs in by_cell.items():
        watts = [rec.window.cpu_w + rec.window.gpu_w for rec in recs]
        power_w[cell] = sum(watts) / len(watts)
        ratios = [rec.gflops_per_watt for rec in recs if rec.gflops_per_watt is not None]
        if ratios:
            eff[cell] = max(ratios)
    eff_headline: dict[str, float] = {}
    for (impl, _n), value in eff.items():
        eff_headline[impl] = max(eff_headline.get(impl, 0.0), value)

    return EfficiencyReport(
        chip_id=archive.machine.chip_id,
        peak_bandwidth_gbs=peak_bw,
        peak_fp32_gflops=peak_gflops,
        bandwidth=bandwidth,
        compute_gflops=compute,
        compute_headline=headline,
        fp32_ratio=fp32_ratio,
        power_w=power_w,
        efficiency_gflops_per_w=eff,
        efficiency_headline=eff_headline,
    )


# --- plot data ----------------------------------------------------------------


def _cell(value) -> str:
    return UNAVAILABLE if value is None else repr(float(value))


def emit_plot_data(report: EfficiencyReport, kind: str, path: str | Path) -> Path:
    """Write one tab-separated table (one-line header) for a figure kind:

    bandwidth   kernel rows x (cpu, gpu, theoretical-peak) columns
    gflops      one row per (implementation, size)
    power       one row per (implementation, size), average watts
    efficiency  one row per (implementation, size), GFLOPS per watt
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    lines: list[str] = []
    if kind == "bandwidth":
        lines.append("kernel\tcpu_gbs\tgpu_gbs\tpeak_gbs")
        for kernel in KERNELS:
            cell = report.bandwidth[kernel]
            lines.append(
                f"{kernel}\t{_cell(cell.cpu_gbs)}\t{_cell(cell.gpu_gbs)}\t{_cell(report.peak_bandwidth_gbs)}"
            )
    elif kind == "gflops":
        lines.append("implementation\tn\tgflops")
        for impl in sorted(report.compute_gflops):
            for n in sorted(report.compute_gflops[impl]):
                lines.append(f"{impl}\t{n}\t{_cell(report.compute_gflops[impl][n])}")
    elif kind == "power":
        lines.append("implementation\tn\twatts")
        for impl, n in sorted(report.power_w):
            lines.append(f"{impl}\t{n}\t{_cell(report.power_w[(impl, n)])}")
    else:  # efficiency
        lines.append("implementation\tn\tgflops_per_watt")
        for impl in sorted(report.compute_gflops):
            for n in sorted(report.compute_gflops[impl]):
                lines.append(f"{impl}\t{n}\t{_cell(report.efficiency_gflops_per_w.get((impl, n)))}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path

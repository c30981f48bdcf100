"""Hardware specification catalog and efficiency arithmetic.

The catalog is a JSON file of per-chip records (theoretical memory bandwidth,
FP32 peak range, core counts); a default populated with Apple M-series base
models ships with the package.  Users add entries for other machines without
code changes.

Bandwidth uses decimal giga (1 GB/s = 1e9 bytes/s) throughout, matching
vendor figures.
"""

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

DEFAULT_CATALOG_NAME = "default"

CATALOG_FIELDS = (
    "chip_id",
    "process_nm",
    "perf_cores",
    "eff_cores",
    "cpu_clock_ghz_p",
    "cpu_clock_ghz_e",
    "gpu_cores_min",
    "gpu_cores_max",
    "gpu_clock_ghz",
    "fp32_tflops_min",
    "fp32_tflops_max",
    "mem_technology",
    "mem_gb_options",
    "mem_bandwidth_gbs",
)


class CatalogError(Exception):
    """Catalog file missing, malformed, or violating the schema."""


@dataclass(frozen=True)
class DeviceSpec:
    """Theoretical peaks and core counts for one chip."""

    chip_id: str
    process_nm: int
    perf_cores: int
    eff_cores: int
    cpu_clock_ghz: tuple[float, float]  # (performance, efficiency)
    gpu_cores: tuple[int, int]  # (min, max) across base models
    gpu_clock_ghz: float
    theoretical_fp32_tflops: tuple[float, float]  # (min, max)
    mem_technology: str
    max_unified_mem_gb: tuple[int, ...]
    mem_bandwidth_gbs: float

    def __post_init__(self):
        if self.mem_bandwidth_gbs <= 0:
            raise CatalogError(f"{self.chip_id}: mem_bandwidth_gbs must be > 0")
        if self.theoretical_fp32_tflops[0] <= 0:
            raise CatalogError(f"{self.chip_id}: fp32_tflops_min must be > 0")
        if self.perf_cores + self.eff_cores < 1:
            raise CatalogError(f"{self.chip_id}: needs at least one CPU core")

    @property
    def total_cores(self) -> int:
        return self.perf_cores + self.eff_cores

    def fp32_peak_gflops(self, use_min: bool = False) -> float:
        """Peak FP32 throughput in GFLOPS; max of the range unless asked."""
        tflops = self.theoretical_fp32_tflops[0 if use_min else 1]
        return tflops * 1000.0


@dataclass(frozen=True)
class Catalog:
    entries: dict[str, DeviceSpec]
    source_path: str

    def __contains__(self, chip_id: str) -> bool:
        return chip_id in self.entries

    def get(self, chip_id: str) -> DeviceSpec | None:
        return self.entries.get(chip_id)

    def chip_ids(self) -> list[str]:
        return list(self.entries)


def _spec_from_record(rec: dict, index: int) -> DeviceSpec:
    if not isinstance(rec, dict):
        raise CatalogError(f"record {index}: expected an object, got {type(rec).__name__}")
    missing = [k for k in CATALOG_FIELDS if k not in rec]
    if missing:
        raise CatalogError(f"record {index}: missing field '{missing[0]}'")
    unknown = [k for k in rec if k not in CATALOG_FIELDS]
    if unknown:
        raise CatalogError(f"record {index}: unknown field '{unknown[0]}'")
    try:
        return DeviceSpec(
            chip_id=str(rec["chip_id"]),
            process_nm=int(rec["process_nm"]),
            perf_cores=int(rec["perf_cores"]),
            eff_cores=int(rec["eff_cores"]),
            cpu_clock_ghz=(float(rec["cpu_clock_ghz_p"]), float(rec["cpu_clock_ghz_e"])),
            gpu_cores=(int(rec["gpu_cores_min"]), int(rec["gpu_cores_max"])),
            gpu_clock_ghz=float(rec["gpu_clock_ghz"]),
            theoretical_fp32_tflops=(
                float(rec["fp32_tflops_min"]),
                float(rec["fp32_tflops_max"]),
            ),
            mem_technology=str(rec["mem_technology"]),
            max_unified_mem_gb=tuple(int(x) for x in rec["mem_gb_options"]),
            mem_bandwidth_gbs=float(rec["mem_bandwidth_gbs"]),
        )
    except (TypeError, ValueError) as exc:
        raise CatalogError(f"record {index} ({rec.get('chip_id', '?')}): {exc}") from exc


def default_catalog_path() -> Path:
    return Path(str(resources.files("unibench").joinpath("data/devices.json")))


def load_catalog(path: str | Path) -> Catalog:
    """Load a catalog file; "default" loads the one shipped with the package.

    Raises CatalogError on a missing file, schema violation (naming the
    offending field), or duplicate chip_id.
    """
    if str(path) == DEFAULT_CATALOG_NAME:
        path = default_catalog_path()
    path = Path(path)
    if not path.is_file():
        raise CatalogError(f"catalog file not found: {path}")
    text = path.read_text()
    if not text.strip():
        raise CatalogError(f"{path}: empty catalog file")
    try:
        records = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(records, list) or not records:
        raise CatalogError(f"{path}: expected a non-empty JSON array of records")
    entries: dict[str, DeviceSpec] = {}
    for i, rec in enumerate(records):
        spec = _spec_from_record(rec, i)
        if spec.chip_id in entries:
            raise CatalogError(f"duplicate chip_id '{spec.chip_id}'")
        entries[spec.chip_id] = spec
    return Catalog(entries=entries, source_path=str(path))


def efficiency_ratio(measured: float, peak: float) -> float:
    """measured / peak, the measured-vs-theoretical efficiency.

    Unit-agnostic (GB/s over GB/s, GFLOPS over GFLOPS).  peak must be > 0.
    """
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    if measured < 0:
        raise ValueError(f"measured must be >= 0, got {measured}")
    return measured / peak

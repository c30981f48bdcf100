"""Power sampling around benchmark runs.

An external sampler process is started with zero-interval, signal-driven
sampling; every boundary signal makes it flush one window covering the time
since the previous signal (or since startup).  The driver protocol is:

    spawn sampler -> sleep warmup_s -> [begin mark, run, end mark] per
    repetition -> stop sampler -> parse the output file.

With that shape, window 0 is the warmup/idle interval and the window for
repetition i sits at index 2*i + 1 — the even windows between repetitions
are idle gaps.

The sampler is an injected command template, so tests substitute a scripted
fake; on supported platforms the default is the first-party tool
``powermetrics -i 0 -a 0 -s cpu_power,gpu_power -o <FILE>`` with SIGINFO as
the boundary signal.
"""

import math
import re
import shlex
import signal
import subprocess
import time
from dataclasses import dataclass, field

DEFAULT_WARMUP_S = 2.0

DEFAULT_COMMAND_TEMPLATE = "powermetrics -i 0 -a 0 -s cpu_power,gpu_power -o {output}"


def default_boundary_signal() -> str:
    return "SIGINFO" if hasattr(signal, "SIGINFO") else "SIGUSR1"


class PowerLogError(ValueError):
    """Sampler output does not match the documented window format."""


@dataclass
class SamplerConfig:
    command_template: str = DEFAULT_COMMAND_TEMPLATE
    warmup_s: float = DEFAULT_WARMUP_S
    output_path: str = "power.txt"
    enabled: bool = True
    boundary_signal: str = field(default_factory=default_boundary_signal)
    # POSIX signals do not queue: two boundaries delivered faster than the
    # sampler can handle them coalesce and a window is lost.  mark() enforces
    # this much spacing (the sleep lands in the idle gap between windows,
    # never inside a timed region).
    min_mark_interval_s: float = 0.05

    def command(self) -> list[str]:
        if not self.command_template:
            raise ValueError("command template must be non-empty when enabled")
        return shlex.split(self.command_template.replace("{output}", self.output_path))


@dataclass
class SamplerHandle:
    config: SamplerConfig
    process: subprocess.Popen | None = None
    disabled_reason: str | None = None
    marks_sent: int = 0
    spawned_monotonic: float | None = None
    first_mark_monotonic: float | None = None
    last_mark_monotonic: float | None = None

    @property
    def enabled(self) -> bool:
        return self.process is not None and self.disabled_reason is None

    @property
    def pid(self) -> int | None:
        return self.process.pid if self.process else None


def spawn_sampler(config: SamplerConfig) -> SamplerHandle:
    """Start the sampler and wait out the warmup period.

    A missing executable or refused spawn disables power measurement but
    never blocks the benchmarks: the returned handle is inert and every
    operation on it is a no-op.
    """
    if not config.enabled:
        return SamplerHandle(config, disabled_reason="power disabled by configuration")
    spawned = time.monotonic()
    try:
        argv = config.command()
        proc = subprocess.Popen(
            argv, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL
        )
    except (OSError, ValueError) as exc:
        return SamplerHandle(config, disabled_reason=f"sampler unavailable: {exc}")
    time.sleep(config.warmup_s)
    if proc.poll() is not None:
        return SamplerHandle(
            config, disabled_reason=f"sampler exited early (code {proc.returncode})"
        )
    return SamplerHandle(config, process=proc, spawned_monotonic=spawned)


def mark(handle: SamplerHandle) -> None:
    """Deliver one window-boundary signal; no-op on a disabled handle.
    A dead child disables monitoring for the remainder of the run."""
    if not handle.enabled:
        return
    if handle.last_mark_monotonic is not None:
        spacing = handle.config.min_mark_interval_s - (
            time.monotonic() - handle.last_mark_monotonic
        )
        if spacing > 0:
            time.sleep(spacing)
    if handle.process.poll() is not None:
        handle.disabled_reason = (
            f"sampler died (code {handle.process.returncode}); monitoring disabled"
        )
        return
    signum = getattr(signal, handle.config.boundary_signal)
    try:
        handle.process.send_signal(signum)
    except (ProcessLookupError, PermissionError) as exc:
        handle.disabled_reason = f"cannot signal sampler: {exc}"
        return
    handle.marks_sent += 1
    handle.last_mark_monotonic = time.monotonic()
    if handle.first_mark_monotonic is None:
        handle.first_mark_monotonic = handle.last_mark_monotonic


def stop_sampler(handle: SamplerHandle) -> None:
    if handle.process is None:
        return
    if handle.process.poll() is None:
        time.sleep(0.1)  # let the sampler flush the window of the final mark
        handle.process.terminate()
        try:
            handle.process.wait(timeout=10)
        except subprocess.TimeoutExpired:
            handle.process.kill()
            handle.process.wait()


# --- window parsing ---------------------------------------------------------


@dataclass(frozen=True)
class PowerWindow:
    elapsed_s: float
    cpu_w: float
    gpu_w: float

    def __post_init__(self):
        for name in ("elapsed_s", "cpu_w", "gpu_w"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise PowerLogError(f"{name} must be finite, got {v}")
        if self.elapsed_s <= 0:
            raise PowerLogError(f"elapsed_s must be > 0, got {self.elapsed_s}")
        if self.cpu_w < 0 or self.gpu_w < 0:
            raise PowerLogError("power must be >= 0")


_HEADER_RE = re.compile(r"\*{3}\s*Sampled system activity.*\(([0-9.]+)ms elapsed\)")
_CPU_RE = re.compile(r"^CPU Power:\s*([0-9.]+)\s*mW\s*$")
_GPU_RE = re.compile(r"^GPU Power:\s*([0-9.]+)\s*mW\s*$")


def parse_power_log(text: str) -> list[PowerWindow]:
    """Parse sampler output into windows, in order.

    Windows open at a header line carrying the elapsed milliseconds and must
    each contain a CPU and a GPU power line (milliwatts).  Unknown lines are
    ignored; a window missing either power field raises PowerLogError naming
    the window index.
    """
    windows: list[PowerWindow] = []
    elapsed_ms: float | None = None
    cpu_mw: float | None = None
    gpu_mw: float | None = None
    in_window = False

    def close(index: int):
        if cpu_mw is None or gpu_mw is None:
            missing = "CPU" if cpu_mw is None else "GPU"
            raise PowerLogError(f"window {index}: missing {missing} power line")
        windows.append(
            PowerWindow(elapsed_s=elapsed_ms / 1000.0, cpu_w=cpu_mw / 1000.0, gpu_w=gpu_mw / 1000.0)
        )

    for line in text.splitlines():
        header = _HEADER_RE.search(line)
        if header:
            if in_window:
                close(len(windows))
            elapsed_ms = float(header.group(1))
            cpu_mw = gpu_mw = None
            in_window = True
            continue
        if not in_window:
            continue
        m = _CPU_RE.match(line.strip())
        if m:
            cpu_mw = float(m.group(1))
            continue
        m = _GPU_RE.match(line.strip())
        if m:
            gpu_mw = float(m.group(1))
    if in_window:
        close(len(windows))
    return windows


def render_power_log(windows: list[PowerWindow]) -> str:
    """Emit the documented subset of the sampler format; parse_power_log
    inverts this exactly on the fixture corpus."""
    parts = []
    for w in windows:
        parts.append(
            f"*** Sampled system activity ({w.elapsed_s * 1000.0!r}ms elapsed) ***\n"
            f"\n"
            f"CPU Power: {w.cpu_w * 1000.0!r} mW\n"
            f"GPU Power: {w.gpu_w * 1000.0!r} mW\n"
        )
    return "\n".join(parts)


# --- energy arithmetic -------------------------------------------------------


def energy_of(window: PowerWindow) -> float:
    """Joules dissipated over the window: (cpu + gpu) watts x seconds."""
    return (window.cpu_w + window.gpu_w) * window.elapsed_s


def merge_windows(windows: list[PowerWindow]) -> PowerWindow:
    """Back-to-back windows merged into one (time-weighted average power)."""
    if not windows:
        raise ValueError("cannot merge zero windows")
    total = sum(w.elapsed_s for w in windows)
    cpu = sum(w.cpu_w * w.elapsed_s for w in windows) / total
    gpu = sum(w.gpu_w * w.elapsed_s for w in windows) / total
    return PowerWindow(elapsed_s=total, cpu_w=cpu, gpu_w=gpu)


def gflops_per_watt(gflops: float, watts: float) -> float:
    """The suite's energy-efficiency metric."""
    if watts <= 0:
        raise ValueError(f"watts must be > 0, got {watts}")
    return gflops / watts


@dataclass
class EnergyRecord:
    implementation: str
    n: int
    repetition: int
    window: PowerWindow
    energy_j: float
    gflops_per_watt: float | None = None

    @classmethod
    def from_window(
        cls, key: tuple[str, int, int], window: PowerWindow, gflops: float | None = None
    ) -> "EnergyRecord":
        impl, n, rep = key
        watts = window.cpu_w + window.gpu_w
        ratio = gflops_per_watt(gflops, watts) if (gflops is not None and watts > 0) else None
        return cls(
            implementation=impl,
            n=n,
            repetition=rep,
            window=window,
            energy_j=energy_of(window),
            gflops_per_watt=ratio,
        )

    def to_dict(self) -> dict:
        return {
            "implementation": self.implementation,
            "n": self.n,
            "repetition": self.repetition,
            "elapsed_s": self.window.elapsed_s,
            "cpu_w": self.window.cpu_w,
            "gpu_w": self.window.gpu_w,
            "energy_j": self.energy_j,
            "gflops_per_watt": self.gflops_per_watt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnergyRecord":
        return cls(
            implementation=d["implementation"],
            n=d["n"],
            repetition=d["repetition"],
            window=PowerWindow(d["elapsed_s"], d["cpu_w"], d["gpu_w"]),
            energy_j=d["energy_j"],
            gflops_per_watt=d["gflops_per_watt"],
        )


# --- protocol driver ----------------------------------------------------------


class PowerMonitor:
    """Wraps a benchmark run in begin/end boundary marks per repetition.

    Strictly observational: with the sampler disabled every method is a
    no-op, so enabling or disabling power measurement cannot change any
    timing result.
    """

    def __init__(self, config: SamplerConfig):
        self.config = config
        self.handle: SamplerHandle | None = None
        self.keys: list[tuple[str, int, int]] = []

    def start(self):
        self.handle = spawn_sampler(self.config)
        return self

    @property
    def enabled(self) -> bool:
        return self.handle is not None and self.handle.enabled

    @property
    def disabled_reason(self) -> str | None:
        return self.handle.disabled_reason if self.handle else "not started"

    def begin(self, key):
        if self.enabled:
            mark(self.handle)

    def end(self, key):
        if self.enabled:
            mark(self.handle)
            self.keys.append(tuple(key))

    def stop(self):
        if self.handle:
            stop_sampler(self.handle)

    def windows(self) -> list[PowerWindow]:
        if self.handle is None or self.handle.process is None:
            return []
        try:
            with open(self.config.output_path) as f:
                return parse_power_log(f.read())
        except FileNotFoundError:
            return []

    def energy_records(self, gflops_by_key: dict | None = None) -> list[EnergyRecord]:
        """Join parsed windows back to the benchmark repetitions they
        covered: repetition i maps to window 2*i + 1."""
        windows = self.windows()
        gflops_by_key = gflops_by_key or {}
        records = []
        for i, key in enumerate(self.keys):
            w_index = 2 * i + 1
            if w_index >= len(windows):
                break
            records.append(
                EnergyRecord.from_window(key, windows[w_index], gflops_by_key.get(key))
            )
        return records

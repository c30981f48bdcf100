import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unibench.devices import load_catalog
from unibench.gemm import GemmResult
from unibench.power import EnergyRecord, PowerWindow
from unibench.report import (
    ArchiveError,
    GpuStreamResult,
    MachineInfo,
    PLOT_KINDS,
    RunArchive,
    build_efficiency_report,
    emit_plot_data,
    load,
    persist,
)
from unibench.stream import KernelTiming, StreamResult, summarize_times


@pytest.fixture(scope="module")
def catalog():
    return load_catalog("default")


def _stream_result(triad_gbs=103.0) -> StreamResult:
    entries = {}
    for kind, gbs in (("copy", 98.0), ("scale", 97.0), ("add", 101.0), ("triad", triad_gbs)):
        from unibench.stream import bytes_moved

        t = bytes_moved(kind, 2**25, 4) / (gbs * 1e9)
        entries[(kind, 1)] = summarize_times(kind, 2**25, 4, [t * 1.25, t])
        entries[(kind, 2)] = summarize_times(kind, 2**25, 4, [t * 2.5, t * 2.0])
    return StreamResult(
        entries=entries,
        validation_passed=True,
        n_elements=2**25,
        elem_bytes=4,
        scalar_q=3.0,
        repetitions=2,
        thread_counts=[1, 2],
    )


def _archive(chip="M4", with_power=True) -> RunArchive:
    gemm = [
        GemmResult("blas", 512, [0.01, 0.02], 100.0, True),
        GemmResult("blas", 1024, [0.004, 0.005], 536.6, True),
        GemmResult("gpu_tiled", 1024, [], None, None, status="skipped(no-gpu)"),
    ]
    energy = []
    if with_power:
        energy = [
            EnergyRecord.from_window(("blas", 512, 0), PowerWindow(0.0101, 5.0, 0.5), 95.0),
            EnergyRecord.from_window(("blas", 512, 1), PowerWindow(0.0201, 5.5, 0.4), 50.0),
        ]
    return RunArchive(
        machine=MachineInfo(chip_id=chip, device="box", memory="16GB", cooling="Air", os="testOS"),
        stream_cpu=_stream_result(),
        stream_gpu=GpuStreamResult(skipped_reason="skipped(no-gpu)"),
        gemm=gemm,
        energy=energy,
        created="2025-01-01T00:00:00",
        notes={"gpu": "no adapter"},
    )


# --- persistence ---------------------------------------------------------------


def test_roundtrip_synthetic(tmp_path):
    archive = _archive()
    path = persist(archive, tmp_path / "run.json")
    assert load(path) == archive


def test_unknown_schema_version_named(tmp_path):
    d = _archive().to_dict()
    d["schema_version"] = 99
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    with pytest.raises(ArchiveError, match="99"):
        load(p)


def test_missing_schema_version(tmp_path):
    d = _archive().to_dict()
    del d["schema_version"]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    with pytest.raises(ArchiveError, match="schema_version"):
        load(p)


def test_missing_chip_id(tmp_path):
    d = _archive().to_dict()
    del d["machine"]["chip_id"]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    with pytest.raises(ArchiveError, match="chip_id"):
        load(p)


def test_duplicate_gemm_keys_rejected():
    archive = _archive()
    archive.gemm.append(archive.gemm[0])
    with pytest.raises(ArchiveError, match="duplicate"):
        archive.validate()


def test_persist_deterministic(tmp_path):
    archive = _archive()
    p1 = persist(archive, tmp_path / "one.json")
    p2 = persist(archive, tmp_path / "two.json")
    assert p1.read_bytes() == p2.read_bytes()


# --- randomized round-trip -------------------------------------------------------

finite = st.floats(min_value=1e-9, max_value=1e9, allow_nan=False, allow_infinity=False)


@st.composite
def archives(draw):
    kernels = ["copy", "scale", "add", "triad"]
    entries = {}
    for kind in draw(st.sets(st.sampled_from(kernels), min_size=1)):
        for threads in draw(st.sets(st.integers(min_value=1, max_value=8), min_size=1, max_size=3)):
            times = draw(st.lists(finite, min_size=1, max_size=4))
            entries[(kind, threads)] = KernelTiming(
                best_bandwidth_gbs=draw(finite),
                best_time_s=min(times),
                all_times_s=times,
            )
    stream = StreamResult(
        entries=entries,
        validation_passed=draw(st.booleans()),
        n_elements=draw(st.integers(min_value=1, max_value=2**26)),
        elem_bytes=draw(st.sampled_from([4, 8])),
        scalar_q=3.0,
        repetitions=draw(st.integers(min_value=2, max_value=20)),
        thread_counts=sorted({t for (_, t) in entries}),
    )
    impls = ["naive", "tiled", "blas", "gpu_naive", "gpu_tiled"]
    cells = draw(
        st.sets(
            st.tuples(st.sampled_from(impls), st.sampled_from([32, 64, 128, 256])),
            max_size=6,
        )
    )
    gemm = [
        GemmResult(
            implementation=impl,
            n=n,
            times_s=draw(st.lists(finite, min_size=1, max_size=5)),
            gflops_best=draw(st.one_of(st.none(), finite)),
            verified=draw(st.sampled_from([True, False, None])),
            status=draw(st.sampled_from(["ok", "skipped(provider)", "skipped(no-gpu)"])),
        )
        for impl, n in cells
    ]
    energy = [
        EnergyRecord.from_window(
            (r.implementation, r.n, i),
            PowerWindow(draw(finite), draw(finite), draw(finite)),
            gflops=draw(st.one_of(st.none(), finite)),
        )
        for i, r in enumerate(gemm[:2])
    ]
    return RunArchive(
        machine=MachineInfo(
            chip_id=draw(st.text(min_size=1, max_size=8).filter(str.strip)),
            device=draw(st.text(max_size=8)),
            memory=draw(st.text(max_size=8)),
            cooling=draw(st.text(max_size=8)),
            os=draw(st.text(max_size=16)),
        ),
        stream_cpu=stream,
        stream_gpu=draw(
            st.one_of(
                st.none(),
                st.just(GpuStreamResult(skipped_reason="skipped(no-gpu)")),
            )
        ),
        gemm=gemm,
        energy=energy,
        created=draw(st.text(max_size=20)),
        notes={},
    )


@settings(max_examples=100, deadline=None)
@given(archives())
def test_roundtrip_randomized(tmp_path_factory, archive):
    path = tmp_path_factory.mktemp("arch") / "run.json"
    persist(archive, path)
    assert load(path) == archive


# --- efficiency report -------------------------------------------------------------


def test_report_reported_value_arithmetic(catalog):
    report = build_efficiency_report(_archive(), catalog)
    assert report.peak_bandwidth_gbs == 120
    assert report.bandwidth["triad"].cpu_ratio == pytest.approx(103 / 120)
    assert report.bandwidth["triad"].gpu_ratio is None  # gpu skipped
    assert report.compute_headline["blas"] == (536.6, 1024)
    # best repetition ratio is the headline
    assert report.efficiency_gflops_per_w[("blas", 512)] == pytest.approx(95.0 / 5.5)
    assert report.efficiency_headline["blas"] == pytest.approx(95.0 / 5.5)


def test_report_unknown_chip_marks_unavailable(catalog):
    report = build_efficiency_report(_archive(chip="Z9"), catalog)
    assert report.peak_bandwidth_gbs is None
    assert report.bandwidth["triad"].cpu_gbs == pytest.approx(103.0, rel=1e-6)
    assert report.bandwidth["triad"].cpu_ratio is None
    assert report.fp32_ratio["blas"] is None


def test_report_zero_gemm_results(catalog):
    archive = _archive()
    archive.gemm = []
    archive.energy = []
    report = build_efficiency_report(archive, catalog)
    assert report.compute_gflops == {}
    assert report.compute_headline == {}


def test_report_headline_is_max_over_sizes(catalog):
    report = build_efficiency_report(_archive(), catalog)
    for impl, (gflops, _n) in report.compute_headline.items():
        assert gflops == max(report.compute_gflops[impl].values())


def test_report_use_min_peak(catalog):
    archive = _archive(chip="M1")
    report = build_efficiency_report(archive, catalog, use_min_peak=True)
    assert report.peak_fp32_gflops == pytest.approx(2290.0)


def test_report_does_not_mutate_archive(catalog):
    archive = _archive()
    snapshot = archive.to_dict()
    build_efficiency_report(archive, catalog)
    assert archive.to_dict() == snapshot


# --- plot data -------------------------------------------------------------------


def test_plot_bandwidth_shape(tmp_path, catalog):
    report = build_efficiency_report(_archive(), catalog)
    path = emit_plot_data(report, "bandwidth", tmp_path / "bw.tsv")
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "kernel\tcpu_gbs\tgpu_gbs\tpeak_gbs"
    assert len(lines) == 5  # header + 4 kernels
    assert lines[4].startswith("triad\t")
    assert lines[1].split("\t")[2] == "unavailable"  # gpu column


def test_plot_gflops_rows(tmp_path, catalog):
    report = build_efficiency_report(_archive(), catalog)
    path = emit_plot_data(report, "gflops", tmp_path / "g.tsv")
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "implementation\tn\tgflops"
    assert len(lines) == 3  # blas@512, blas@1024


def test_plot_efficiency_unavailable_markers(tmp_path, catalog):
    report = build_efficiency_report(_archive(with_power=False), catalog)
    path = emit_plot_data(report, "efficiency", tmp_path / "e.tsv")
    body = path.read_text().strip().split("\n")[1:]
    assert body
    assert all(line.endswith("unavailable") for line in body)


def test_plot_outputs_deterministic(tmp_path, catalog):
    report = build_efficiency_report(_archive(), catalog)
    for kind in PLOT_KINDS:
        a = emit_plot_data(report, kind, tmp_path / f"a-{kind}.tsv").read_bytes()
        b = emit_plot_data(report, kind, tmp_path / f"b-{kind}.tsv").read_bytes()
        assert a == b

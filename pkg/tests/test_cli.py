import json
from pathlib import Path

import numpy as np
import pytest

from unibench import report as report_mod
from unibench.cli import main
from unibench.gemm import PROVIDERS


def _archives_in(out_dir: Path) -> list[Path]:
    return sorted(out_dir.glob("run-*.json"))


def test_gemm_two_cells(tmp_path, capsys):
    out = tmp_path / "runs"
    code = main([
        "gemm", "--impls", "naive", "--sizes", "32,64", "--reps", "2",
        "--out", str(out), "--chip", "M4",
    ])
    assert code == 0
    archives = _archives_in(out)
    assert len(archives) == 1
    archive = report_mod.load(archives[0])
    assert [(r.implementation, r.n) for r in archive.gemm] == [("naive", 32), ("naive", 64)]
    assert all(r.verified for r in archive.gemm)
    assert archive.machine.chip_id == "M4"


def test_all_without_gpu_exits_zero_with_skipped_cells(tmp_path):
    out = tmp_path / "runs"
    code = main([
        "all", "--impls", "naive,gpu_naive,gpu_tiled", "--sizes", "32", "--reps", "2",
        "--stream-n", "4096", "--stream-reps", "2", "--cache-hint", "0",
        "--out", str(out), "--chip", "M1",
    ])
    assert code == 0
    archive = report_mod.load(_archives_in(out)[0])
    gpu_cells = [r for r in archive.gemm if r.implementation.startswith("gpu_")]
    if any("no adapter" in n or "wgpu" in n for n in archive.notes.values()):
        assert gpu_cells
        assert {r.status for r in gpu_cells} == {"skipped(no-gpu)"}
        assert archive.stream_gpu.skipped_reason == "skipped(no-gpu)"
    assert archive.stream_cpu is not None
    assert archive.stream_cpu.validation_passed


def test_reruns_never_overwrite(tmp_path):
    out = tmp_path / "runs"
    for _ in range(2):
        assert main([
            "gemm", "--impls", "naive", "--sizes", "32", "--reps", "1",
            "--out", str(out), "--chip", "M4",
        ]) == 0
    assert len(_archives_in(out)) == 2


def test_dry_run_writes_nothing(tmp_path, capsys):
    out = tmp_path / "runs"
    code = main([
        "gemm", "--impls", "naive,blas", "--sizes", "32", "--dry-run",
        "--out", str(out), "--chip", "M4",
    ])
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["gemm"]["implementations"] == ["naive", "blas"]
    assert printed["gemm"]["sizes"] == [32]
    assert not out.exists()


def test_unknown_implementation_lists_valid_names(tmp_path, capsys):
    code = main([
        "gemm", "--impls", "warp", "--sizes", "32", "--out", str(tmp_path), "--chip", "M4",
    ])
    assert code == 2
    err = capsys.readouterr().err
    assert "warp" in err
    assert "naive" in err and "gpu_tiled" in err


def test_verification_failure_exit_code(tmp_path, monkeypatch):
    def broken(a2, b2, c2):
        np.matmul(a2, b2, out=c2)
        c2[0, 0] += 1000.0

    monkeypatch.setitem(PROVIDERS, "broken", broken)
    code = main([
        "gemm", "--impls", "blas", "--provider", "broken", "--sizes", "32",
        "--reps", "1", "--out", str(tmp_path / "runs"), "--chip", "M4",
    ])
    assert code == 1


def test_provider_none_is_skip_not_failure(tmp_path):
    out = tmp_path / "runs"
    code = main([
        "gemm", "--impls", "blas", "--provider", "none", "--sizes", "32",
        "--reps", "1", "--out", str(out), "--chip", "M4",
    ])
    assert code == 0
    archive = report_mod.load(_archives_in(out)[0])
    assert archive.gemm[0].status == "skipped(provider)"


def test_report_on_shipped_fixture(capsys, tmp_path):
    fixture = Path(report_mod.__file__).parent / "data" / "example_m4.json"
    plots = tmp_path / "plots"
    code = main(["report", "--in", str(fixture), "--catalog", "default",
                 "--plots", str(plots)])
    assert code == 0
    out = capsys.readouterr().out
    assert "85.8%" in out          # triad 103 GB/s over the 120 GB/s peak
    assert "2900.00" in out        # headline GFLOPS
    assert "329.92" in out         # GFLOPS/W
    for kind in ("bandwidth", "gflops", "power", "efficiency"):
        assert (plots / f"{kind}.tsv").is_file()


def test_report_missing_archive(capsys):
    assert main(["report", "--in", "/nonexistent.json"]) == 2


def test_catalog_lists_chips(capsys):
    assert main(["catalog"]) == 0
    out = capsys.readouterr().out
    for chip in ("M1", "M2", "M3", "M4"):
        assert chip in out


def test_catalog_validates_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[]")
    assert main(["catalog", "--catalog", str(bad)]) == 2


def test_stream_command(tmp_path):
    out = tmp_path / "runs"
    code = main([
        "stream", "--stream-n", "4096", "--stream-reps", "2", "--cache-hint", "0",
        "--out", str(out), "--chip", "M2",
    ])
    assert code == 0
    archive = report_mod.load(_archives_in(out)[0])
    assert archive.stream_cpu is not None
    assert archive.gemm == []


def test_power_with_fake_sampler(tmp_path):
    from conftest import fake_sampler_template

    out = tmp_path / "runs"
    events = tmp_path / "events.log"
    code = main([
        "gemm", "--impls", "naive", "--sizes", "32", "--reps", "2",
        "--out", str(out), "--chip", "M4",
        "--power", "--power-command", fake_sampler_template(events),
        "--power-warmup", "0.3",
    ])
    assert code == 0
    archive = report_mod.load(_archives_in(out)[0])
    assert len(archive.energy) == 2
    for rec in archive.energy:
        assert rec.implementation == "naive"
        assert rec.energy_j > 0
        assert rec.gflops_per_watt is not None
    kinds = [l.split()[0] for l in events.read_text().splitlines()]
    assert kinds == ["start", "signal", "signal", "signal", "signal", "term"]

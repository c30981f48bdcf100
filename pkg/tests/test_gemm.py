import numpy as np
import pytest

from unibench.gemm import (
    DEFAULT_SIZES,
    GemmConfig,
    GemmConfigError,
    GemmResult,
    PROVIDERS,
    ProviderUnavailable,
    alloc_matrix,
    generate_matrix,
    gemm_external,
    gemm_flops,
    gemm_naive,
    gemm_tiled,
    get_provider,
    gflops_from_times,
    run_gemm_suite,
    verify_bound,
    verify_gemm,
)
from unibench.mem import PAGE_SIZE


def _matrix(rows) -> "MatrixF32":
    arr = np.asarray(rows, dtype=np.float32)
    m = alloc_matrix(arr.shape[0])
    m.as_2d()[:] = arr
    return m


HAND_A = [[1, 2], [3, 4]]
HAND_B = [[5, 6], [7, 8]]
HAND_C = [[19, 22], [43, 50]]


# --- generation -------------------------------------------------------------


def test_alloc_rounds_to_pages():
    assert alloc_matrix(32).alloc_bytes == 16384  # 4096 data bytes -> one page
    assert alloc_matrix(64).alloc_bytes == 16384  # exactly one page
    assert alloc_matrix(65).alloc_bytes == 32768
    assert alloc_matrix(32).buffer.ctypes.data % PAGE_SIZE == 0


def test_generate_deterministic():
    m1 = generate_matrix(48, 42)
    m2 = generate_matrix(48, 42)
    assert np.array_equal(m1.data, m2.data)
    assert not np.array_equal(m1.data, generate_matrix(48, 43).data)


def test_generate_range_and_padding():
    m = generate_matrix(33, 9)
    assert float(m.data.min()) >= 0.0
    assert float(m.data.max()) < 1.0
    padding = m.buffer[33 * 33 * 4 :]
    assert not padding.any()


def _splitmix64_scalar(x: int) -> int:
    mask = (1 << 64) - 1
    z = x & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def test_generate_matches_scalar_reference():
    # Independent big-int implementation of the documented generator.
    n, seed = 8, 42
    m = generate_matrix(n, seed)
    gamma = 0x9E3779B97F4A7C15
    for i in range(n * n):
        z = _splitmix64_scalar(seed + (i + 1) * gamma)
        expected = np.float32((z >> 40) * 2.0**-24)
        assert m.data[i] == expected, i


# --- flops ------------------------------------------------------------------


def test_flops_small_values():
    assert gemm_flops(1) == 1
    assert gemm_flops(2) == 12


def test_flops_frozen_1024():
    assert gemm_flops(1024) == 2_146_435_072


def test_flops_all_default_sizes_against_expanded_form():
    for n in DEFAULT_SIZES:
        assert gemm_flops(n) == 2 * n**3 - n**2


def test_flops_strictly_increasing():
    values = [gemm_flops(n) for n in DEFAULT_SIZES]
    assert values == sorted(values)
    assert len(set(values)) == len(values)


def test_gflops_from_times_uses_min():
    times = [0.004, 0.002, 0.008, 0.003, 0.005]
    expected = gemm_flops(512) / 0.002 / 1e9
    assert gflops_from_times(512, times) == pytest.approx(expected)


def test_gflops_permutation_invariant():
    import itertools

    times = [0.004, 0.002, 0.008]
    values = {gflops_from_times(64, list(p)) for p in itertools.permutations(times)}
    assert len(values) == 1


# --- implementations ---------------------------------------------------------


def test_naive_hand_case():
    c = gemm_naive(_matrix(HAND_A), _matrix(HAND_B))
    assert c.as_2d().tolist() == HAND_C


def test_naive_identity():
    n = 16
    eye = _matrix(np.eye(n))
    b = generate_matrix(n, 5)
    c = gemm_naive(eye, b)
    assert np.array_equal(c.as_2d(), b.as_2d())


def test_naive_annihilator():
    n = 16
    zero = _matrix(np.zeros((n, n)))
    b = generate_matrix(n, 5)
    assert not gemm_naive(zero, b).data.any()


def test_naive_dimension_mismatch():
    with pytest.raises(GemmConfigError, match="mismatch"):
        gemm_naive(_matrix(HAND_A), generate_matrix(3, 1))


def test_tiled_hand_case_small_tile_two_threads():
    c = gemm_tiled(_matrix(HAND_A), _matrix(HAND_B), tile=1, threads=2)
    assert c.as_2d().tolist() == HAND_C


def test_tiled_degenerate_tile_matches_naive_bitwise():
    n = 37
    a, b = generate_matrix(n, 1), generate_matrix(n, 2)
    tiled = gemm_tiled(a, b, tile=64, threads=1)  # tile >= n: blocked-once
    naive = gemm_naive(a, b)
    assert np.array_equal(tiled.as_2d(), naive.as_2d())


def test_tiled_vs_naive_within_bound_seed7():
    n = 128
    a, b = generate_matrix(n, 7), generate_matrix(n, 8)
    result = verify_gemm(gemm_tiled(a, b, tile=16), gemm_naive(a, b), a, b)
    assert result.passed


@pytest.mark.parametrize("threads", [1, 2, 4])
def test_tiled_thread_count_independent(threads):
    n = 96
    a, b = generate_matrix(n, 11), generate_matrix(n, 12)
    reference = gemm_tiled(a, b, tile=32, threads=1)
    other = gemm_tiled(a, b, tile=32, threads=threads)
    assert np.array_equal(reference.as_2d(), other.as_2d())


def test_external_hand_case():
    a, b = _matrix(HAND_A), _matrix(HAND_B)
    result = verify_gemm(gemm_external(a, b), gemm_naive(a, b), a, b)
    assert result.passed


def test_external_vs_oracle_512():
    n = 512
    a, b = generate_matrix(n, 42), generate_matrix(n, 43)
    result = verify_gemm(gemm_external(a, b), gemm_naive(a, b), a, b)
    assert result.passed, (result.max_abs_error, result.bound)


def test_provider_none_unavailable():
    with pytest.raises(ProviderUnavailable):
        get_provider("none")
    with pytest.raises(ProviderUnavailable, match="unknown"):
        get_provider("warp-drive")


# --- verification ------------------------------------------------------------


def test_verify_identical_is_exact_pass():
    n = 32
    a, b = generate_matrix(n, 3), generate_matrix(n, 4)
    c = gemm_naive(a, b)
    result = verify_gemm(c, c, a, b)
    assert result.passed
    assert result.max_abs_error == 0.0


def test_verify_flags_perturbed_element_at_its_index():
    n = 64
    a, b = generate_matrix(n, 3), generate_matrix(n, 4)
    oracle = gemm_naive(a, b)
    c = gemm_naive(a, b)
    bound = verify_bound(n, float(np.max(a.data)), float(np.max(b.data)))
    c.as_2d()[5, 9] += 2 * bound
    result = verify_gemm(c, oracle, a, b)
    assert not result.passed
    assert result.worst_index == (5, 9)


# --- suite --------------------------------------------------------------------


def test_suite_default_skip_rules_drop_large_naive():
    cfg = GemmConfig(sizes=[32, 8192], repetitions=1, implementations=["naive"])
    results = run_gemm_suite(cfg)
    assert [(r.implementation, r.n) for r in results] == [("naive", 32)]


def test_suite_times_length_and_verification():
    cfg = GemmConfig(sizes=[32, 64], repetitions=5, implementations=["naive", "tiled", "blas"])
    results = run_gemm_suite(cfg)
    assert len(results) == 6
    for r in results:
        assert len(r.times_s) == 5
        assert r.verified is True
        assert r.status == "ok"
        assert r.gflops_best == pytest.approx(gflops_from_times(r.n, r.times_s))


def test_suite_provider_unavailable_marks_skipped():
    cfg = GemmConfig(
        sizes=[32], repetitions=2, implementations=["naive", "blas"], provider="none"
    )
    results = run_gemm_suite(cfg)
    by_impl = {r.implementation: r for r in results}
    assert by_impl["blas"].status == "skipped(provider)"
    assert by_impl["blas"].gflops_best is None
    assert by_impl["naive"].status == "ok"


def test_suite_verification_failure_marks_but_continues(monkeypatch):
    def broken(a2, b2, c2):
        np.matmul(a2, b2, out=c2)
        c2[0, 0] += 1000.0

    monkeypatch.setitem(PROVIDERS, "broken", broken)
    cfg = GemmConfig(
        sizes=[32, 64], repetitions=1, implementations=["blas", "naive"], provider="broken"
    )
    results = run_gemm_suite(cfg)
    by_key = {(r.implementation, r.n): r for r in results}
    assert by_key[("blas", 32)].verified is False
    assert by_key[("blas", 64)].verified is False
    assert by_key[("naive", 64)].verified is True


def test_suite_config_validation():
    with pytest.raises(GemmConfigError, match="powers of two"):
        GemmConfig(sizes=[48]).validate()
    with pytest.raises(GemmConfigError, match="repetitions"):
        GemmConfig(sizes=[32], repetitions=0).validate()


def test_result_roundtrip():
    r = GemmResult("tiled", 64, [0.1, 0.2], 123.4, True)
    assert GemmResult.from_dict(r.to_dict()) == r

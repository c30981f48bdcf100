import sys
from pathlib import Path

import pytest

from unibench.stream import StreamConfig

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"
FAKE_SAMPLER = TESTS_DIR / "fake_sampler.py"


def fake_sampler_template(events_path, output_placeholder="{output}") -> str:
    return f"{sys.executable} {FAKE_SAMPLER} --events {events_path} -o {output_placeholder}"


@pytest.fixture
def power_fixture_text() -> str:
    return (FIXTURES / "power_log.txt").read_text()


def small_stream_config(n=4096, reps=3, threads=(1, 2), **kw) -> StreamConfig:
    kw.setdefault("cache_size_hint", 0)
    return StreamConfig(n_elements=n, repetitions=reps, thread_counts=list(threads), **kw)

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from anderson_spectra.experiments import build_ids, load_config, run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

_ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return CONFIGS


@pytest.fixture(scope="session")
def strong_disorder_ids():
    """IDS for 1D Uniform(-1,1), lambda=5: 5000 periodic boxes of 200 sites."""
    return build_ids(load_config(CONFIGS / "local_statistics.yaml"))


@pytest.fixture(scope="session")
def local_run(strong_disorder_ids, tmp_path_factory):
    cfg = load_config(CONFIGS / "local_statistics.yaml")
    return run(cfg, tmp_path_factory.mktemp("local"), ids=strong_disorder_ids)


@pytest.fixture(scope="session")
def two_scale_run(strong_disorder_ids, tmp_path_factory):
    cfg = load_config(CONFIGS / "two_scale.yaml")
    return run(cfg, tmp_path_factory.mktemp("two_scale"), ids=strong_disorder_ids)


@pytest.fixture(scope="session")
def bernoulli_runs(strong_disorder_ids, tmp_path_factory):
    """The Bernoulli acceptance config, run once serially and once with two workers."""
    cfg = load_config(CONFIGS / "bernoulli.yaml")
    serial = run(cfg, tmp_path_factory.mktemp("bern_w1"), ids=strong_disorder_ids)
    parallel = run(cfg.replace(ensemble__workers=2), tmp_path_factory.mktemp("bern_w2"), ids=strong_disorder_ids)
    return serial, parallel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def smoke_runs(tmp_path_factory):
    """The smoke config run serially, again serially, and with two workers."""
    cfg = load_config(CONFIGS / "smoke.yaml")
    first = run(cfg, tmp_path_factory.mktemp("smoke_a"))
    again = run(cfg, tmp_path_factory.mktemp("smoke_b"))
    parallel = run(cfg.replace(ensemble__workers=2), tmp_path_factory.mktemp("smoke_w2"))
    return first, again, parallel

import time

import numpy as np
import pytest

from proxywave import experiment

import acceptance_log


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bench_run(tmp_path_factory):
    """The full benchmark run (all four methods, reports written), once per session."""
    out = tmp_path_factory.mktemp("bench")
    cfg = experiment.ExperimentConfig(out_dir=str(out))
    t0 = time.perf_counter()
    summary, prob, results = experiment.run_experiment(cfg)
    wall = time.perf_counter() - t0
    return {"config": cfg, "summary": summary, "problem": prob, "results": results, "wall": wall,
            "out_dir": out}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

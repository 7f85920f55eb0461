from __future__ import annotations

import contextlib
import time

import numpy as np
import pytest

from botflow.synthetic import synthetic_dataset, synthetic_flows

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results:
        terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line for an acceptance criterion.

    Fails the test if the body raises or exceeds ``limit`` seconds.
    """
    results = request.config.stash[_RESULTS]

    @contextlib.contextmanager
    def run(name: str, limit: float):
        start = time.perf_counter()
        status, detail = "FAIL", ""
        notes: list[str] = []
        try:
            yield notes
            elapsed = time.perf_counter() - start
            if elapsed >= limit:
                detail = f"runtime {elapsed:.2f}s exceeds {limit:g}s"
                raise AssertionError(f"{name}: {detail}")
            status, detail = "PASS", f"{elapsed:.2f}s (limit {limit:g}s)"
        except BaseException as exc:
            detail = detail or f"{type(exc).__name__}: {exc}".splitlines()[0]
            raise
        finally:
            extra = "; ".join(notes)
            line = f"{status} {name}: {detail}" + (f" [{extra}]" if extra else "")
            print(line)
            results.append(line)

    return run


@pytest.fixture(scope="session")
def small_ds():
    return synthetic_dataset(2000, 0.1, seed=3)


@pytest.fixture(scope="session")
def tiny_flows():
    return synthetic_flows(200, 0.1, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

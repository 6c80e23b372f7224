"""Session fixtures for the full-scale pipelines, shared across test files."""

import pytest

from biharmonic_isp.config import ExperimentConfig
from biharmonic_isp.experiments import exact_measurements, synthesize_measurements


@pytest.fixture(scope="session")
def ex1():
    return ExperimentConfig.from_preset("example1")


@pytest.fixture(scope="session")
def ex2():
    return ExperimentConfig.from_preset("example2")


def _table(cfg, kind, exact=False):
    grid, field, rec = cfg.grid(), cfg.strength(), cfg.receivers()
    if exact:
        return exact_measurements(rec, grid, field, cfg.frequencies, kind)
    return synthesize_measurements(rec, grid, field, cfg.frequencies, cfg.paths, cfg.seed, kind)


@pytest.fixture(scope="session")
def ex1_mc(ex1):
    """Example 1, k=2, P=1000, seed 0, difference data."""
    return _table(ex1, "difference")


@pytest.fixture(scope="session")
def ex1_exact(ex1):
    return _table(ex1, "difference", exact=True)


@pytest.fixture(scope="session")
def ex1_mc_magnitude(ex1):
    return _table(ex1, "magnitude")


@pytest.fixture(scope="session")
def ex2_mc(ex2):
    """Example 2, k=1..5, P=1000, seed 0; columns are selected per run."""
    return _table(ex2, "difference")


# -- acceptance report ---------------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion, then assert it."""
    lines = request.config.stash[_ACCEPTANCE]

    def report(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        assert passed, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)

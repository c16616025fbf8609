"""Shared fixtures: session-scoped calibration tables.

Building a table is the expensive step (a full Monte Carlo sweep of the
(alpha, mu_beta) grid), so the acceptance and CLI tests share one ppp table
and one lattice table built here once per session.

Scale is controlled by CELLTRAFFIC_ACCEPTANCE_SCALE:

    ci    5x5 grid, 30 drops per node   (default; minutes on one core)
    desk  11x11 grid, 100 drops per node (tens of minutes; uses all cores)

Because builds are deterministic (same seed + config => byte-identical
table, itself under test), CELLTRAFFIC_TABLE_CACHE=<dir> may point at a
directory where built tables are kept and reused across sessions.
"""

import os
from pathlib import Path

import pytest

from celltraffic.association import LayoutSpec
from celltraffic.calibration import CalibrationConfig, CalibrationTable, build_calibration
from celltraffic.pointgen import RandomStream

SCALE = os.environ.get("CELLTRAFFIC_ACCEPTANCE_SCALE", "ci")
if SCALE == "desk":
    GRID, DROPS, WORKERS = 11, 100, os.cpu_count()
elif SCALE == "ci":
    GRID, DROPS, WORKERS = 5, 30, None
else:  # pragma: no cover - config error
    raise RuntimeError(f"unknown CELLTRAFFIC_ACCEPTANCE_SCALE {SCALE!r}")

SEED = 5

# one PASS/FAIL line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section(f"acceptance criteria ({SCALE} scale)")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one acceptance line; returns the verdict for chaining."""

    def _report(num: int, ok: bool, detail: str) -> bool:
        verdict = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append((num, f"CRITERION {num:2d}: {verdict} - {detail}"))
        return ok

    return _report


@pytest.fixture(scope="session")
def acceptance_scale():
    return {"name": SCALE, "grid": GRID, "drops": DROPS}


def _build(initial):
    cache_dir = os.environ.get("CELLTRAFFIC_TABLE_CACHE", "")
    cache = None
    if cache_dir:
        name = f"calibration_{initial}_{GRID}x{GRID}_{DROPS}drops_seed{SEED}.json"
        cache = Path(cache_dir) / name
        if cache.exists():
            return CalibrationTable.load(cache)
    cfg = CalibrationConfig(n_alpha=GRID, n_beta=GRID, drops=DROPS, initial=initial)
    table = build_calibration(LayoutSpec(), cfg, rng=RandomStream(SEED), workers=WORKERS)
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        table.save(cache)
    return table


@pytest.fixture(scope="session")
def cal_table_ppp():
    return _build("ppp")


@pytest.fixture(scope="session")
def cal_table_lattice():
    return _build("lattice")


@pytest.fixture(scope="session")
def cal_tables(cal_table_ppp, cal_table_lattice):
    return {"ppp": cal_table_ppp, "lattice": cal_table_lattice}

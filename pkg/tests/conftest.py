import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session", autouse=True)
def _space_cache(tmp_path_factory):
    # fresh on-disk cache per session, so timings include every build
    old = os.environ.get("HALFWT_CACHE_DIR")
    os.environ["HALFWT_CACHE_DIR"] = str(tmp_path_factory.mktemp("spaces"))
    yield
    if old is None:
        os.environ.pop("HALFWT_CACHE_DIR", None)
    else:
        os.environ["HALFWT_CACHE_DIR"] = old


_SCANS = {}


def scan_cached(p, N, lams=(1, 2)):
    """Scan reports shared between tests; the first call records its wall time."""
    import time

    from halfwt.eigencurve import default_grid, scan

    key = (p, N, tuple(lams))
    if key not in _SCANS:
        t = time.perf_counter()
        report = scan(default_grid(p, lams), N)
        _SCANS[key] = (report, time.perf_counter() - t)
    return _SCANS[key]


ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])

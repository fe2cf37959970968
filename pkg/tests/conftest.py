import os
import tempfile

import pytest

# keep the on-disk report cache out of the user's home during tests
os.environ.setdefault("GRSUMMANDS_CACHE", tempfile.mkdtemp(prefix="grsummands-test-"))


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion."""
    def record(num: int, name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE[num] = (name, ok, detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        name, ok, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}  {detail}")

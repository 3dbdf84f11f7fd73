import os

# the desk-scale training budget is stated for a single thread
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import json  # noqa: E402
from pathlib import Path  # noqa: E402

import pytest  # noqa: E402

from qpnet import tasks  # noqa: E402

MANIFEST = json.loads((Path(__file__).parent / "acceptance_manifest.json").read_text())
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def manifest():
    return MANIFEST


@pytest.fixture(scope="session")
def uap_result():
    """The pinned integral-functional run, shared so it is trained once per session."""
    return tasks.run_scalar_task(tasks.ScalarTask())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

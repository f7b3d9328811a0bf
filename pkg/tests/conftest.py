from __future__ import annotations

import pytest

from vnfplace import _kernels, objectives, routing, selection, topology
from vnfplace.topology import build_dcell, build_fat_tree, build_leaf_spine

ACCEPTANCE_LINES: list[str] = []

_KERNEL_USERS = (topology, selection, routing, objectives)


@pytest.fixture(params=_kernels.available())
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    mod = _kernels.load(request.param)
    for m in _KERNEL_USERS:
        monkeypatch.setattr(m, "_k", mod)
    return request.param


SMALL = {
    "ft4": lambda: build_fat_tree(4),
    "ls2x4": lambda: build_leaf_spine(2, 2, 4),
    "dcell3": lambda: build_dcell(3),
}


@pytest.fixture(params=sorted(SMALL))
def small_graph(request):
    return SMALL[request.param]()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

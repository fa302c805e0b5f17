from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from revmax.model import Instance, ItemSpec, build_instance  # noqa: E402

# criterion number -> list of (ok, detail); filled by test_acceptance
ACCEPTANCE_RESULTS: dict = {}


def two_step_instance() -> Instance:
    """One user, one item, two steps; repeating the item is worse than showing it once late."""
    item = ItemSpec(0, 0, 2, 0.1, (1.0, 0.95))
    return build_instance(1, [item], 2, 1, [(0, 0, 1, 0.5), (0, 0, 2, 0.6)])


def same_class_instance(a: float, beta: float) -> Instance:
    """One user, two same-class items over three steps, every primitive probability ``a``."""
    items = [ItemSpec(0, 0, 1, beta, (1.0, 1.0, 1.0)), ItemSpec(1, 0, 1, beta, (1.0, 1.0, 1.0))]
    entries = [(0, i, t, a) for i in (0, 1) for t in (1, 2, 3)]
    return build_instance(1, items, 3, 1, entries)


@pytest.fixture
def two_step() -> Instance:
    return two_step_instance()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        parts = ACCEPTANCE_RESULTS[n]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

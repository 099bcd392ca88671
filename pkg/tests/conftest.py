"""Shared fixtures and the acceptance criterion reporter.

Acceptance tests record one PASS/FAIL line per criterion through the
``criterion`` fixture; the lines are echoed in a dedicated section of
the terminal summary so a full run always shows the per-criterion
verdicts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import pytest

from aralab.catalog import default_catalog_path, load_platform_catalog
from aralab.topology import default_topology_path, load_topology

_ACCEPTANCE_LINES: list[str] = []


@dataclass
class CriterionChecks:
    """Collects named sub-checks for one acceptance criterion."""

    items: list[tuple[str, bool, str]] = field(default_factory=list)
    _t0: float = field(default_factory=time.perf_counter)

    def add(self, label: str, ok: bool, detail: str = "") -> None:
        self.items.append((label, bool(ok), detail))

    @property
    def elapsed_s(self) -> float:
        return time.perf_counter() - self._t0

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.items)

    def failures(self) -> list[str]:
        return [f"{label} ({detail})" if detail else label for label, ok, detail in self.items if not ok]


@pytest.fixture()
def criterion():
    """Returns record(name, checks, budget_s): emits the verdict line and asserts."""

    def record(name: str, checks: CriterionChecks, budget_s: float) -> None:
        elapsed = checks.elapsed_s
        checks.add("runtime", elapsed < budget_s, f"{elapsed:.2f}s vs {budget_s:g}s budget")
        if checks.ok:
            line = f"ACCEPTANCE PASS {name} ({len(checks.items)} checks, {elapsed:.2f}s < {budget_s:g}s)"
        else:
            line = f"ACCEPTANCE FAIL {name}: " + "; ".join(checks.failures()) + f" ({elapsed:.2f}s)"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert checks.ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def catalog():
    return load_platform_catalog(default_catalog_path())


@pytest.fixture(scope="session")
def topology():
    return load_topology(default_topology_path())

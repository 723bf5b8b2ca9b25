import numpy as np
import pytest

from corrmax.catalog import get_example


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def examples():
    return {k: get_example(k) for k in ("ex-3-4", "ex-3-6", "ex-3-10", "ex-3-14", "ex-4-2")}


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion."""
    log = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, title, checks):
        passed = all(c.passed for c in checks)
        failing = [c for c in checks if not c.passed]
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}"
        if failing:
            line += "  [" + "; ".join(f"{c.example} {c.quantity}: {c.estimate:.6g} vs {c.exact:.6g}"
                                      for c in failing) + "]"
        log.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

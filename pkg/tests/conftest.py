import pytest

from nobacktrack import examples as ex


def small_corpus():
    """Every chain used for cross-checks; all have at most 12 states."""
    specs = [ex.line_walk(N) for N in (2, 3, 5, 9)]
    specs += [ex.rectangle(3, 2), ex.rectangle(4, 3)]
    specs += list(ex.peskun_counterexample(0.5))
    specs += [ex.random_reversible(n, seed=s) for n, s in ((3, 0), (5, 1), (8, 2), (12, 3))]
    specs += list(ex.random_dominated_pair(6, seed=4))
    return specs


@pytest.fixture(scope="session")
def corpus():
    return small_corpus()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])

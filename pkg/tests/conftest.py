import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``with criterion(n, "label") as c: ...``; the line is FAIL when the
    block raises and PASS otherwise, with the elapsed time.
    """
    import time
    from contextlib import contextmanager

    @contextmanager
    def track(number, label, budget=None):
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield
            status = "PASS"
        finally:
            elapsed = time.perf_counter() - start
            limit = f" (limit {budget:g}s)" if budget else ""
            line = f"criterion {number}: {status}  {label}  [{elapsed:.2f}s{limit}]"
            ACCEPTANCE_LINES[number] = line
            print(line)

    return track


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])

import contextlib

ACCEPTANCE = {}


@contextlib.contextmanager
def criterion(number, title):
    """Record a pass/fail line for the acceptance summary."""
    ACCEPTANCE[number] = (title, "FAIL")
    yield
    ACCEPTANCE[number] = (title, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, status = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}")

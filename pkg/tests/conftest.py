import pytest

from sedlab import natural_scale


def pytest_addoption(parser):
    parser.addoption("--regen-goldens", action="store_true", default=False,
                     help="rewrite tests/golden/*.json from the current build")


@pytest.fixture
def regen_goldens(request):
    return request.config.getoption("--regen-goldens")


@pytest.fixture
def scale():
    return natural_scale(1e-3)


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)``; printed as one line per criterion at the end."""

    def record(n, title, ok, detail):
        _ACCEPTANCE[n] = (title, bool(ok), detail)
        line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"{n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")

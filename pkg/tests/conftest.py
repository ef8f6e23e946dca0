import pytest

from rectcomplex.mesh import Domain, build_uniform_mesh

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def record(request):
    """Log one acceptance line: record(criterion, passed, detail)."""
    lines = request.config.stash[_ACCEPTANCE]

    def _record(criterion: str, passed: bool, detail: str = "") -> None:
        line = f"{'PASS' if passed else 'FAIL'}  {criterion}" + (f"  [{detail}]" if detail else "")
        lines.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def default_domain():
    return Domain(0.0, 2.0, 0.0, 1.0)


@pytest.fixture
def mesh4(default_domain):
    return build_uniform_mesh(default_domain, 4, 4)

import pytest

# criterion -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s[2:])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def shared_cache(tmp_path_factory):
    """One job/calibration cache for every acceptance experiment in the session."""
    mp = pytest.MonkeyPatch()
    path = tmp_path_factory.mktemp("heraldkit-cache")
    mp.setenv("HERALDKIT_CACHE", str(path))
    yield path
    mp.undo()

import pytest

RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record the outcome of one part of an acceptance criterion; a criterion
    passes when all of its recorded parts pass."""
    table = request.config.stash.setdefault(RESULTS, {})

    def record(criterion, ok, detail):
        table.setdefault(criterion, []).append((bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(RESULTS, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(table):
        parts = table[criterion]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

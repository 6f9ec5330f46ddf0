import pytest

from lplangevin.verification import CHECKS

# acceptance results keyed by check id, filled once per session
RESULTS = {}


def acceptance_result(cid):
    if cid not in RESULTS:
        RESULTS[cid] = CHECKS[cid]()
    return RESULTS[cid]


@pytest.fixture(scope="session")
def acceptance():
    return acceptance_result


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    groups = {}
    for cid in CHECKS:
        if cid in RESULTS:
            groups.setdefault(cid.rstrip("ab"), []).append(RESULTS[cid])
    for num, parts in groups.items():
        tag = "PASS" if all(r.passed for r in parts) else "FAIL"
        detail = "; ".join(r.line() for r in parts)
        tr.write_line(f"criterion {num}: {tag}  {detail}")

import pytest

# criterion number -> list of (passed, detail); filled by the acceptance tests
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}

TITLES = {
    1: "fading distribution consistency",
    2: "beam kernel correctness",
    3: "single-beam analytic rate vs Monte Carlo",
    4: "multibeam analytic lower bound vs simulated sum rate",
    5: "nearest-user distance law",
    6: "neighbour-beam interference bound",
    7: "rate scaling slopes",
    8: "rate ratios to the ideal rate",
    9: "single-beam rate vs array size (dense and sparse users)",
    10: "fixed-beam vs zero-forcing precoding",
    11: "deterministic, worker-independent outputs",
}


@pytest.fixture
def record():
    def _record(criterion: int, passed: bool, detail: str) -> None:
        ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(TITLES):
        parts = ACCEPTANCE.get(c)
        if parts is None:
            tr.write_line(f"[----] {c:2d}. {TITLES[c]}: not run")
            continue
        ok = all(p for p, _ in parts)
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] {c:2d}. {TITLES[c]}")
        for p, detail in parts:
            tr.write_line(f"         {'ok ' if p else 'BAD'} {detail}")

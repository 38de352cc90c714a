"""Shared test plumbing: collects acceptance check lines and replays them
in the terminal summary so they are visible regardless of capture mode."""

ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    line = f"[acceptance {number:02d}] {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repro", derandomize=True, deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repro")


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(LINES, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(LINES[key])

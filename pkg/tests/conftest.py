import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

INSTANCES = Path(__file__).parent.parent / "instances"


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    for name, module in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] == "test_acceptance" and getattr(module, "LINES", None):
            terminalreporter.section("acceptance criteria")
            for line in sorted(module.LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
                terminalreporter.write_line(line)

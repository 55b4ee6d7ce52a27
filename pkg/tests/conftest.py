from hypothesis import HealthCheck, settings

# derandomized so repeated runs draw the same examples
settings.register_profile(
    "qdlab",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qdlab")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    from test_acceptance import ACCEPTANCE_KEY

    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_order):
            terminalreporter.write_line(line)


def _order(line: str):
    num = line.split()[1]
    return (int("".join(ch for ch in num if ch.isdigit())), num)

"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

_OUTCOMES: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, title = mark.args
            _OUTCOMES.setdefault(number, {"title": title, "failed": [], "ran": 0})


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when not in ("setup", "call"):
        return
    entry = _OUTCOMES[mark.args[0]]
    if call.excinfo is not None:
        entry["failed"].append(item.name)
    elif call.when == "call":
        entry["ran"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        entry = _OUTCOMES[number]
        if entry["failed"]:
            status = "FAIL"
        elif entry["ran"]:
            status = "PASS"
        else:
            status = "NOT RUN"
        detail = f"  ({', '.join(entry['failed'])})" if entry["failed"] else ""
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}{detail}")

import os
import sys
from collections import OrderedDict

sys.path.insert(0, os.path.dirname(__file__))

_criteria = OrderedDict()


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "notes": [], "seconds": 0.0})
    entry["ok"] = entry["ok"] and call.excinfo is None
    entry["seconds"] += call.duration
    for key, value in item.user_properties:
        if key == "note":
            entry["notes"].append(value)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        line = f"[{'PASS' if e['ok'] else 'FAIL'}] {number:>2}. {e['title']} ({e['seconds']:.1f} s)"
        if e["notes"]:
            line += " - " + "; ".join(e["notes"])
        terminalreporter.write_line(line)

import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): numbered acceptance criterion")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    n, title = mark.args
    rec = item.config._acceptance.setdefault(n, {"title": title, "ok": True, "notes": []})
    if rep.when == "call" or rep.failed:
        rec["ok"] = rec["ok"] and rep.passed
    if rep.when == "call":
        rec["notes"] = [f"{k}={v}" for k, v in item.user_properties]


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "_acceptance", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        r = results[n]
        line = f"[{'PASS' if r['ok'] else 'FAIL'}] {n}. {r['title']}"
        if r["notes"]:
            line += "  (" + ", ".join(r["notes"]) + ")"
        terminalreporter.write_line(line)

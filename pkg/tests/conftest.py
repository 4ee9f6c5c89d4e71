"""Prints one PASS/FAIL line per acceptance criterion after the test run.

Tests opt in with ``@pytest.mark.criterion(n, "title")``; a criterion passes
when every test carrying its marker passed. Measured values reach the
summary through ``record_property("detail", ...)``.
"""

import pytest

_ITEMS = pytest.StashKey[dict]()
_OUTCOMES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by this test")
    config.stash[_ITEMS] = {}
    config.stash[_OUTCOMES] = {}


def pytest_collection_finish(session):
    # session.items is the list after -k / -m deselection
    for item in session.items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            session.config.stash[_ITEMS][item.nodeid] = (m.args[0], m.args[1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    store = item.config.stash[_OUTCOMES]
    if item.nodeid not in item.config.stash[_ITEMS]:
        return
    ok, details = store.get(item.nodeid, (True, []))
    if rep.failed or (rep.when == "call" and rep.skipped):
        ok = False
    if rep.when == "call":
        details = [v for k, v in item.user_properties if k == "detail"]
    store[item.nodeid] = (ok, details)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    items = config.stash[_ITEMS]
    if not items:
        return
    outcomes = config.stash[_OUTCOMES]
    crit = {}
    for nodeid, (n, title) in items.items():
        ok, details = outcomes.get(nodeid, (False, ["not run"]))
        entry = crit.setdefault(n, [title, True, []])
        entry[1] = entry[1] and ok
        entry[2].extend(details)
    terminalreporter.section("acceptance criteria")
    for n in sorted(crit):
        title, ok, details = crit[n]
        tag = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{tag}] criterion {n}: {title}" + (f" | {'; '.join(details)}" if details else ""))

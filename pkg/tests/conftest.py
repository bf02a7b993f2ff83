"""Test-suite wiring: prints one status line per acceptance criterion."""


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.when == "call":
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    elif report.when == "setup" and report.skipped:
        status = "SKIP"
    elif report.when == "setup" and report.failed:
        status = "FAIL"
    else:
        return
    print(f"[acceptance] {name}: {status}")

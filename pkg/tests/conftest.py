import pytest


@pytest.fixture
def checklist(request):
    """Report one pass/fail line per acceptance check, bypassing capture.

    The line shows up in the live terminal output even for passing
    tests, so a full run reads as a checklist; the assert still fails
    the test when the check does not hold.
    """
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def report(name: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print(f"\n{line}", flush=True)
        else:
            print(line, flush=True)
        assert ok, f"{name}: {detail}"

    return report

import time
from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


class CriterionRecorder:
    def __init__(self, store, node):
        self.store = store
        self.node = node
        self.detail = ""

    @contextmanager
    def run(self, label: str, limit_s: float):
        """Time the block; record PASS only if it completes within ``limit_s``."""
        entry = {"label": label, "ok": False, "detail": "", "elapsed": None, "limit": limit_s}
        self.store[self.node] = entry
        t0 = time.perf_counter()
        try:
            yield self
            elapsed = time.perf_counter() - t0
            entry["elapsed"] = elapsed
            entry["detail"] = self.detail
            assert elapsed < limit_s, f"{label}: runtime {elapsed:.2f}s exceeds {limit_s}s"
            entry["ok"] = True
        except BaseException as exc:
            entry["elapsed"] = entry["elapsed"] or time.perf_counter() - t0
            entry["detail"] = self.detail or str(exc).splitlines()[0][:120]
            raise


@pytest.fixture
def criterion(request):
    return CriterionRecorder(request.config.stash[_RESULTS], request.node.nodeid)


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_RESULTS]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for entry in sorted(results.values(), key=lambda e: e["label"]):
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(
            f"{status}  {entry['label']}  ({entry['elapsed']:.2f}s / {entry['limit']}s)  {entry['detail']}"
        )

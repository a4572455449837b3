import time
from contextlib import contextmanager

import pytest

import nrtree
import nrtree.cli
import nrtree.pipeline
import nrtree.tree

# every (model, train) pair grown anywhere in the session, for the structural checks
BUILT_TREES = []
CRITERIA = {}

_original_build_tree = nrtree.tree.build_tree


def _recording_build_tree(train, dev, cfg):
    model = _original_build_tree(train, dev, cfg)
    BUILT_TREES.append((model, train))
    return model


def pytest_configure(config):
    for mod in (nrtree, nrtree.tree, nrtree.pipeline, nrtree.cli):
        mod.build_tree = _recording_build_tree


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so it can inspect every tree the suite produced
    items.sort(key=lambda item: item.nodeid.startswith("tests/test_acceptance.py"))


@contextmanager
def criterion(number, title):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        CRITERIA[number] = (title, False, time.perf_counter() - start)
        raise
    CRITERIA[number] = (title, True, time.perf_counter() - start)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, ok, secs = CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title} ({secs:.1f}s)")


@pytest.fixture
def built_trees():
    return BUILT_TREES

import functools

import numpy as np
import pytest

import ginidebias
from ginidebias import optimizer
from ginidebias.dataset import LabeledPredictionSet

_ACCEPTANCE: dict = {}
# (best_objective, initial_objective) of every search run anywhere in the suite
OPTIMIZATION_RUNS: list = []


def _recording(search):
    @functools.wraps(search)
    def wrapper(*args, **kwargs):
        result = search(*args, **kwargs)
        OPTIMIZATION_RUNS.append((result.best_objective, result.initial_objective))
        return result

    return wrapper


# Installed before test modules import the optimizer, so every caller
# (including debias and the CLI) goes through the recorder.
for _name in ("anneal", "exhaustive_search"):
    _wrapped = _recording(getattr(optimizer, _name))
    setattr(optimizer, _name, _wrapped)
    if hasattr(ginidebias, _name):
        setattr(ginidebias, _name, _wrapped)


def pytest_collection_modifyitems(items):
    # criterion 9 inspects every run, so it goes last
    last = [i for i in items if i.get_closest_marker("after_all_runs")]
    items[:] = [i for i in items if i not in last] + last


def pytest_configure(config):
    config.addinivalue_line("markers", "after_all_runs: run after every other test")


@pytest.fixture(scope="session")
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, title, passed, detail=""):
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        return passed

    return record


@pytest.fixture(scope="session")
def optimization_runs():
    return OPTIMIZATION_RUNS


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] {number:>2}. {title}  {detail}".rstrip())


def set_from_accuracy_counts(correct, support):
    """Prediction set whose argmax accuracy per class is correct[i] / support[i].

    Correct rows put 0.7 on their own class; wrong rows put 0.7 on the next one.
    """
    n = len(correct)
    probs, labels = [], []
    for cls, (k, m) in enumerate(zip(correct, support)):
        for j in range(m):
            target = cls if j < k else (cls + 1) % n
            row = np.full(n, 0.3 / (n - 1))
            row[target] = 0.7
            probs.append(row)
            labels.append(cls)
    return LabeledPredictionSet(np.array(probs), np.array(labels))


@pytest.fixture
def six_row_set():
    # hand-enumerated fixture used with the map [identity, scale(0.5)]
    probs = [
        [0.9, 0.1],
        [0.7, 0.3],
        [0.8, 0.2],
        [0.55, 0.45],
        [0.6, 0.4],
        [0.3, 0.7],
    ]
    return LabeledPredictionSet(np.array(probs), np.array([0, 0, 0, 1, 1, 1]))

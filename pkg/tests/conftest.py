import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def two_blobs(n_per_class=60, n_features=4, gap=4.0, seed=0):
    """Two Gaussian blobs separated along every axis; one file id per sample."""
    rng = np.random.default_rng(seed)
    X = np.vstack([
        rng.normal(0.0, 1.0, (n_per_class, n_features)),
        rng.normal(gap, 1.0, (n_per_class, n_features)),
    ])
    y = np.repeat([0, 1], n_per_class)
    return X, y


@pytest.fixture
def blobs():
    return two_blobs()


def make_dataset(X, y, file_ids=None, class_names=None, descriptors=None):
    from fragkit.dataset import Dataset

    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n_classes = int(y.max()) + 1 if y.size else 1
    return Dataset(
        X,
        y,
        np.arange(len(y)) if file_ids is None else file_ids,
        class_names or [f"C{c}" for c in range(n_classes)],
        descriptors or [f"f{j}" for j in range(X.shape[1])],
    )


# one status line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def record_acceptance(number, title, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"{status} criterion {number}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def skip_acceptance(number, title, reason):
    line = f"SKIP criterion {number}: {title} ({reason})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rsforest import Dataset, FeatureColumn  # noqa: E402


def write_files(directory: Path, labels, columns):
    """columns: list of (name, kind, measure, filename, text)."""
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "labels.csv").write_text("".join(f"{y}\n" for y in labels))
    specs = []
    for name, kind, measure, fname, text in columns:
        (directory / fname).write_text(text)
        specs.append({"name": name, "kind": kind, "measure": measure, "file": fname})
    path = directory / "manifest.json"
    path.write_text(json.dumps({"name": "t", "labels": {"file": "labels.csv"}, "columns": specs}))
    return path


@pytest.fixture
def manifest_dir(tmp_path):
    def make(labels, columns):
        return write_files(tmp_path / "ds", labels, columns)

    return make


def numeric_dataset(X, y, name="num"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    cols = [FeatureColumn(f"x{j}", "numeric", X[:, j], "euclidean") for j in range(X.shape[1])]
    return Dataset(cols, [str(v) for v in y], name=name)


@pytest.fixture
def separable():
    rng = np.random.default_rng(3)
    y = np.repeat([0, 1], 30)
    # both features leave a margin of 2 between the classes
    X = rng.uniform(0, 1, (60, 2)) + 3 * y[:, None]
    return numeric_dataset(X, y, "separable")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(mod.RESULTS.items()):
        terminalreporter.write_line(line)

from pathlib import Path

import numpy as np
import pytest

from fae.dataset import NUMERIC, Column, EncodedDataset, Encoder, Schema, standardize

ROOT = Path(__file__).resolve().parents[1]
ADULT_FILES = [ROOT / "data" / "adult" / "adult.data", ROOT / "data" / "adult" / "adult.test"]
BANK_FILES = [ROOT / "data" / "bank" / "bank-additional-full.csv"]


def numeric_dataset(X, y, protected, scale=True) -> EncodedDataset:
    X = np.asarray(X, dtype=float)
    cols = [Column(f"x{j}", NUMERIC) for j in range(X.shape[1])]
    ds = EncodedDataset(X, np.asarray(y, dtype=np.int64), np.asarray(protected, dtype=bool), Encoder(cols, {}))
    return standardize(ds) if scale else ds


def biased_data(n=400, seed=0, shift=1.0, m=3):
    """Two groups; the protected group's positives are harder to detect when shift > 0."""
    rng = np.random.default_rng(seed)
    prot = rng.random(n) < 0.4
    pos_rate = np.where(prot, 0.15, 0.35)
    y = np.where(rng.random(n) < pos_rate, 1, -1)
    X = rng.normal(size=(n, m))
    X[:, 0] += 1.5 * (y == 1)
    X[:, 0] -= shift * (prot & (y == 1))
    X[:, 1] += 0.8 * prot
    X = np.column_stack([X, prot.astype(float)])
    return numeric_dataset(X, y, prot)


def fair_data(n=400, seed=0, m=3):
    """Mirrored groups: every row has a twin with the same features and label in the other group."""
    rng = np.random.default_rng(seed)
    prot = np.arange(n) % 2 == 0
    y = np.where((np.arange(n) // 2) % 2 == 0, 1, -1)
    X = np.repeat(rng.normal(size=(n // 2, m)), 2, axis=0)
    X[:, 0] += 1.0 * (y == 1)
    return numeric_dataset(X, y, prot)


SYNTH_SCHEMA = {
    "name": "synth",
    "columns": [
        {"name": "x1", "kind": "numeric"},
        {"name": "x2", "kind": "numeric"},
        {"name": "color", "kind": "categorical", "values": ["red", "green", "blue"]},
        {"name": "sex", "kind": "categorical", "values": ["F", "M"]},
        {"name": "label", "kind": "categorical", "values": ["yes", "no"]},
    ],
    "label": "label",
    "positive_label": "yes",
    "sensitive": "sex",
    "protected_value": "F",
    "download": "Generate it with the test helper.",
}


def write_synth_csv(path, n=200, seed=0):
    rng = np.random.default_rng(seed)
    lines = []
    for i in range(n):
        sex = "F" if rng.random() < 0.45 else "M"
        pos = rng.random() < (0.3 if sex == "F" else 0.45)
        x1 = rng.normal() + (1.2 if pos else 0.0) - (0.5 if (pos and sex == "F") else 0.0)
        x2 = rng.normal() + (0.5 if sex == "F" else 0.0)
        color = ["red", "green", "blue"][int(rng.integers(3))]
        lines.append(f"{x1:.6f},{x2:.6f},{color},{sex},{'yes' if pos else 'no'}")
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


@pytest.fixture
def synth_schema():
    return Schema.from_dict(SYNTH_SCHEMA)


@pytest.fixture
def synth_files(tmp_path):
    import yaml

    data = write_synth_csv(tmp_path / "synth.csv")
    schema = tmp_path / "synth.yaml"
    schema.write_text(yaml.safe_dump(SYNTH_SCHEMA))
    return data, schema


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

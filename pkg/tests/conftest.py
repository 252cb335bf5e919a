import os
from pathlib import Path

import numpy as np
import pytest

from agsoa import gcn
from agsoa.datasets import random_graph
from agsoa.graph import Graph

ROOT = Path(__file__).resolve().parents[1]
DATA = Path(__file__).parent / "data"

ACCEPTANCE_LINES = []


def dataset_dir(name):
    """Raw dataset directory from ``AGSOA_<NAME>_DIR`` or ``data/<name>``."""
    env = os.environ.get(f"AGSOA_{name.upper()}_DIR")
    path = Path(env) if env else ROOT / "data" / name
    if path.is_dir() and list(path.glob("*.content")) and list(path.glob("*.cites")):
        return path
    return None


def toy_instance(seed, n=8, d=6, c=2, p_edge=0.3, hidden=16, kind="GCN", epochs=100):
    """Small random graph with a model trained on half of its nodes."""
    g = random_graph(n, d, c, p_edge=p_edge, seed=seed, binary_features=True)
    train = np.zeros(n, dtype=bool)
    train[np.random.default_rng(seed).permutation(n)[: n // 2]] = True
    g = Graph(g.adjacency, g.features, g.labels, train_mask=train, test_mask=~train)
    model = gcn.fit(g, kind=kind, hidden=hidden,
                    cfg=gcn.TrainConfig(learning_rate=0.01, epochs=epochs, seed=seed, restore_best=False))
    return g, model


@pytest.fixture
def path2():
    return Graph(np.array([[0, 1], [1, 0]]), np.eye(2), np.array([0, 1]))


@pytest.fixture
def star3():
    A = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]])
    return Graph(A, np.eye(3), np.array([0, 1, 1]))


@pytest.fixture
def raw_toy(tmp_path):
    """A 6-paper raw dataset in .content/.cites form."""
    content = tmp_path / "toy.content"
    cites = tmp_path / "toy.cites"
    rows = [
        ("p10", "1 0 1 0", "Theory"),
        ("p3", "0 1 0 1", "AI"),
        ("p7", "1 1 0 0", "Theory"),
        ("p1", "0 0 1 1", "AI"),
        ("p5", "1 0 0 1", "DB"),
        ("p2", "0 1 1 0", "DB"),
    ]
    content.write_text("".join(f"{i}\t{f.replace(' ', chr(9))}\t{lab}\n" for i, f, lab in rows))
    cites.write_text("p10\tp3\np3\tp10\np7\tp1\np5\tp2\np2\tp10\nghost\tp1\n")
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import os
from pathlib import Path

import numpy as np
import pytest

from povgraph.graph_core import AttributedGraph, save_attributed_graph


def dataset_root() -> Path:
    override = os.environ.get("POVGRAPH_DATA")
    if override:
        return Path(override)
    return Path(__file__).resolve().parents[1] / "data"


def require_dataset(name: str) -> Path:
    """Path of an exported benchmark dataset, or an explicit SKIP."""
    d = dataset_root() / name
    if not (d / "meta.json").is_file():
        pytest.skip(f"SKIP: dataset '{name}' not exported at {d}")
    return d


def k3_graph() -> AttributedGraph:
    return AttributedGraph(
        num_nodes=3,
        edges=np.array([[0, 1], [0, 2], [1, 2]], dtype=np.int64),
        features=np.eye(3),
    )


def path3_graph() -> AttributedGraph:
    return AttributedGraph(
        num_nodes=3,
        edges=np.array([[0, 1], [1, 2]], dtype=np.int64),
        features=np.eye(3),
    )


@pytest.fixture
def k3_dir(tmp_path):
    d = tmp_path / "k3"
    save_attributed_graph(k3_graph(), d, name="k3")
    return d


@pytest.fixture
def labeled_dir(tmp_path):
    """Small labeled dataset: K5 plus a feature outlier at node 2."""
    rng = np.random.Generator(np.random.PCG64(11))
    n = 5
    edges = np.array(
        [(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.int64
    )
    feats = np.tile(np.array([1.0, -1.0]), (n, 1)) + 0.01 * rng.normal(size=(n, 2))
    feats[2] += np.array([4.0, 4.0])
    labels = np.zeros(n, dtype=np.int8)
    labels[2] = 1
    g = AttributedGraph(num_nodes=n, edges=edges, features=feats, labels=labels)
    d = tmp_path / "k5lab"
    save_attributed_graph(g, d, name="k5lab")
    return d

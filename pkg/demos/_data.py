"""Shared dataset choice for the demo scripts: Cora when available, else a synthetic stand-in."""

import os
from pathlib import Path

from agsoa.datasets import citation_graph
from agsoa.graph import find_raw_files, load_cora_content, stratified_split


def demo_graph(seed: int = 0):
    root = Path(os.environ.get("AGSOA_CORA_DIR", Path(__file__).resolve().parents[1] / "data" / "cora"))
    try:
        content, cites = find_raw_files(root)
        g, name = load_cora_content(content, cites), "cora"
    except (FileNotFoundError, ValueError):
        g, name = citation_graph(n=600, d=300, c=5, seed=11), "synthetic citation graph"
    return stratified_split(g, seed), name


def demo_dataset_path() -> tuple[str, str]:
    """Dataset string for ``ExperimentSpec``: the Cora directory, or a synthetic spec."""
    root = Path(os.environ.get("AGSOA_CORA_DIR", Path(__file__).resolve().parents[1] / "data" / "cora"))
    try:
        find_raw_files(root)
        return str(root), "cora"
    except (FileNotFoundError, ValueError):
        return "synthetic:n=600:d=300:c=5:seed=11", "synthetic"

"""Graph data model, loaders and structural utilities.

A :class:`Graph` is an immutable value: every array is stored read-only and
edits such as :func:`flip_edge` return a new graph.  Adjacency is dense; the
attacks need gradients for absent edges, which are dense anyway.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised when a dataset file cannot be parsed."""


def _frozen(a: np.ndarray) -> np.ndarray:
    if isinstance(a, np.ndarray) and not a.flags.writeable:
        return a
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected attributed graph with binary symmetric adjacency.

    Parameters
    ----------
    adjacency : np.ndarray [n, n]
        Symmetric 0/1 matrix with zero diagonal.
    features : np.ndarray [n, d]
        Node feature matrix.
    labels : np.ndarray [n]
        Integer class ids in ``[0, c)``.
    train_mask, val_mask, test_mask : np.ndarray [n] of bool, optional
        Pairwise disjoint split masks; all False when omitted.
    label_names : tuple of str, optional
        Original label strings, index-aligned with class ids.
    node_ids : tuple of str, optional
        Original node identifiers, index-aligned with rows.
    """

    adjacency: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray | None = None
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None
    label_names: tuple = field(default=())
    node_ids: tuple = field(default=())

    def __post_init__(self):
        adj = np.asarray(self.adjacency)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        n = adj.shape[0]
        if not ((adj == 0) | (adj == 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise ValueError("adjacency must have a zero diagonal")
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != n:
            raise ValueError(f"features must have {n} rows, got shape {feats.shape}")
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (n,):
            raise ValueError(f"labels must have length {n}")
        if n and labels.min() < 0:
            raise ValueError("labels must be nonnegative")

        masks = []
        for name in ("train_mask", "val_mask", "test_mask"):
            m = getattr(self, name)
            m = np.zeros(n, dtype=bool) if m is None else np.asarray(m, dtype=bool)
            if m.shape != (n,):
                raise ValueError(f"{name} must have length {n}")
            masks.append(m)
        if (masks[0] & masks[1]).any() or (masks[0] & masks[2]).any() or (masks[1] & masks[2]).any():
            raise ValueError("split masks must be pairwise disjoint")

        if adj.dtype != np.int8:
            adj = adj.astype(np.int8)
        object.__setattr__(self, "adjacency", _frozen(adj))
        object.__setattr__(self, "features", _frozen(feats))
        object.__setattr__(self, "labels", _frozen(labels))
        for name, m in zip(("train_mask", "val_mask", "test_mask"), masks):
            object.__setattr__(self, name, _frozen(m))
        object.__setattr__(self, "label_names", tuple(self.label_names))
        object.__setattr__(self, "node_ids", tuple(self.node_ids))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def c(self) -> int:
        if self.label_names:
            return len(self.label_names)
        return int(self.labels.max()) + 1 if self.n else 0

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return int(np.triu(self.adjacency, 1).sum())

    @property
    def has_split(self) -> bool:
        return bool(self.train_mask.any() or self.val_mask.any() or self.test_mask.any())

    def edges(self) -> np.ndarray:
        """Return edges as an ``[m, 2]`` array of ``(i, j)`` with ``i < j``."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return np.stack([i, j], axis=1)

    def equals(self, other: "Graph") -> bool:
        """Value equality on adjacency, features, labels and masks."""
        return (
            np.array_equal(self.adjacency, other.adjacency)
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.train_mask, other.train_mask)
            and np.array_equal(self.val_mask, other.val_mask)
            and np.array_equal(self.test_mask, other.test_mask)
        )

    def with_adjacency(self, adjacency: np.ndarray) -> "Graph":
        return replace(self, adjacency=adjacency)


@dataclass(frozen=True)
class DegreeInfo:
    degrees: np.ndarray
    total: int


@dataclass(frozen=True)
class LoadReport:
    """Bookkeeping from :func:`load_cora_content`."""

    n_rows: int
    n_cites_rows: int
    n_dropped: int
    n_self_loops: int


def degree_info(g: Graph) -> DegreeInfo:
    degrees = g.adjacency.sum(axis=1, dtype=np.int64)
    return DegreeInfo(degrees=degrees, total=int(degrees.sum()))


def normalized_adjacency(adjacency) -> np.ndarray:
    """Symmetric normalization ``D^-1/2 (A + I) D^-1/2``.

    Accepts a :class:`Graph` or a (possibly weighted) square array.
    """
    if isinstance(adjacency, Graph):
        adjacency = adjacency.adjacency
    a_hat = np.asarray(adjacency, dtype=np.float64) + np.eye(adjacency.shape[0])
    q = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * q[:, None] * q[None, :]


def flip_edge(g: Graph, i: int, j: int) -> Graph:
    """Toggle the undirected edge ``(i, j)``; returns a new graph."""
    if i == j:
        raise ValueError("self-loop modification forbidden")
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise IndexError(f"node index out of range for n={g.n}: ({i}, {j})")
    adj = np.array(g.adjacency)
    adj[i, j] = adj[j, i] = 1 - adj[i, j]
    return g.with_adjacency(adj)


def stratified_split(g: Graph, seed: int, train: float = 0.1, val: float = 0.1) -> Graph:
    """Per-class seeded random split; the remainder becomes the test set."""
    if not (0 < train < 1 and 0 <= val < 1 and train + val < 1):
        raise ValueError(f"invalid split fractions train={train} val={val}")
    rng = np.random.default_rng(seed)
    train_mask = np.zeros(g.n, dtype=bool)
    val_mask = np.zeros(g.n, dtype=bool)
    for cls in np.unique(g.labels):
        idx = np.flatnonzero(g.labels == cls)
        idx = rng.permutation(idx)
        n_train = max(1, int(round(train * len(idx))))
        n_val = int(round(val * len(idx)))
        train_mask[idx[:n_train]] = True
        val_mask[idx[n_train:n_train + n_val]] = True
    test_mask = ~(train_mask | val_mask)
    return replace(g, train_mask=train_mask, val_mask=val_mask, test_mask=test_mask)


def row_normalize(g: Graph) -> Graph:
    """Scale each feature row to unit L1 norm (all-zero rows are left alone)."""
    x = np.array(g.features)
    s = x.sum(axis=1, keepdims=True)
    s[s == 0] = 1.0
    return replace(g, features=x / s)


# ---------------------------------------------------------------------------
# Cora-style raw format
# ---------------------------------------------------------------------------

def load_cora_content(content_path, cites_path, *, with_report: bool = False):
    """Load a ``.content`` / ``.cites`` pair.

    Node ids are indexed in first-appearance order of the content file,
    labels in lexicographic order of their strings.  Citations are
    symmetrized, duplicates collapsed, and citations naming unknown ids are
    dropped (the count is logged and returned in the :class:`LoadReport`).
    """
    content_path, cites_path = Path(content_path), Path(cites_path)
    ids, rows, raw_labels = [], [], []
    index = {}
    with content_path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 2:
                parts = line.split()
            if len(parts) < 2:
                raise GraphFormatError(f"{content_path}:{lineno}: expected id, features, label")
            node_id, label = parts[0], parts[-1]
            try:
                feats = [float(v) for v in parts[1:-1]]
            except ValueError as exc:
                raise GraphFormatError(f"{content_path}:{lineno}: {exc}") from None
            if rows and len(feats) != len(rows[0]):
                raise GraphFormatError(
                    f"{content_path}:{lineno}: expected {len(rows[0])} features, got {len(feats)}"
                )
            if node_id in index:
                raise GraphFormatError(f"{content_path}:{lineno}: duplicate node id {node_id!r}")
            index[node_id] = len(ids)
            ids.append(node_id)
            rows.append(feats)
            raw_labels.append(label)
    if not ids:
        raise GraphFormatError(f"{content_path}: empty content file")

    n = len(ids)
    label_names = tuple(sorted(set(raw_labels)))
    label_index = {name: k for k, name in enumerate(label_names)}
    labels = np.array([label_index[s] for s in raw_labels], dtype=np.int64)

    adj = np.zeros((n, n), dtype=np.int8)
    n_cites = n_dropped = n_loops = 0
    with cites_path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"{cites_path}:{lineno}: expected 'cited<TAB>citing'")
            n_cites += 1
            a, b = parts
            if a not in index or b not in index:
                n_dropped += 1
                continue
            i, j = index[a], index[b]
            if i == j:
                n_loops += 1
                continue
            adj[i, j] = adj[j, i] = 1
    if n_dropped:
        log.warning("dropped %d citations referencing unknown node ids", n_dropped)

    g = Graph(
        adjacency=adj,
        features=np.array(rows, dtype=np.float64),
        labels=labels,
        label_names=label_names,
        node_ids=tuple(ids),
    )
    if with_report:
        return g, LoadReport(n_rows=n, n_cites_rows=n_cites, n_dropped=n_dropped, n_self_loops=n_loops)
    return g


def find_raw_files(directory) -> tuple[Path, Path]:
    """Locate the single ``*.content`` and ``*.cites`` file in a directory."""
    directory = Path(directory)
    content = sorted(directory.glob("*.content"))
    cites = sorted(directory.glob("*.cites"))
    if len(content) != 1 or len(cites) != 1:
        raise FileNotFoundError(f"expected one .content and one .cites file in {directory}")
    return content[0], cites[0]


# ---------------------------------------------------------------------------
# Canonical edge-list format
# ---------------------------------------------------------------------------
#
#   n d c
#   features
#   <n rows of d space-separated reals>
#   labels
#   <n integers, one per line>
#   edges
#   <i j pairs with i < j>
#   split                (optional)
#   <n tokens, each one of train / val / test / ->

def save_canonical(g: Graph, path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"{g.n} {g.d} {g.c}\n")
        fh.write("features\n")
        np.savetxt(fh, g.features, fmt="%.17g")
        fh.write("labels\n")
        np.savetxt(fh, g.labels, fmt="%d")
        fh.write("edges\n")
        np.savetxt(fh, g.edges(), fmt="%d")
        if g.has_split:
            fh.write("split\n")
            tags = np.full(g.n, "-", dtype=object)
            tags[g.train_mask] = "train"
            tags[g.val_mask] = "val"
            tags[g.test_mask] = "test"
            fh.write("\n".join(tags) + "\n")


def load_canonical(path) -> Graph:
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise GraphFormatError(f"{path}: empty file")
    try:
        n, d, c = (int(v) for v in lines[0].split())
    except ValueError:
        raise GraphFormatError(f"{path}:1: header must be 'n d c'") from None

    def expect(lineno, word):
        if lineno >= len(lines) or lines[lineno].strip() != word:
            raise GraphFormatError(f"{path}:{lineno + 1}: expected '{word}' block")

    pos = 1
    expect(pos, "features")
    feats = np.zeros((n, d))
    for r in range(n):
        lineno = pos + 1 + r
        try:
            vals = [float(v) for v in lines[lineno].split()]
        except (IndexError, ValueError):
            raise GraphFormatError(f"{path}:{lineno + 1}: bad feature row") from None
        if len(vals) != d:
            raise GraphFormatError(f"{path}:{lineno + 1}: expected {d} features, got {len(vals)}")
        feats[r] = vals
    pos += 1 + n
    expect(pos, "labels")
    try:
        labels = np.array([int(lines[pos + 1 + r]) for r in range(n)], dtype=np.int64)
    except (IndexError, ValueError):
        raise GraphFormatError(f"{path}:{pos + 2}: bad labels block") from None
    pos += 1 + n
    expect(pos, "edges")
    adj = np.zeros((n, n), dtype=np.int8)
    pos += 1
    while pos < len(lines) and lines[pos].strip() != "split":
        if lines[pos].strip():
            try:
                i, j = (int(v) for v in lines[pos].split())
            except ValueError:
                raise GraphFormatError(f"{path}:{pos + 1}: bad edge row") from None
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise GraphFormatError(f"{path}:{pos + 1}: invalid edge ({i}, {j})")
            adj[i, j] = adj[j, i] = 1
        pos += 1

    masks = {}
    if pos < len(lines):
        tags = [t.strip() for t in lines[pos + 1:pos + 1 + n]]
        if len(tags) != n or not set(tags) <= {"train", "val", "test", "-"}:
            raise GraphFormatError(f"{path}:{pos + 1}: bad split block")
        tags = np.array(tags)
        masks = dict(train_mask=tags == "train", val_mask=tags == "val", test_mask=tags == "test")

    if labels.size and labels.max() >= c:
        raise GraphFormatError(f"{path}: labels exceed declared class count {c}")
    return Graph(adjacency=adj, features=feats, labels=labels,
                 label_names=tuple(str(k) for k in range(c)), **masks)


def load_graph(path) -> Graph:
    """Load a canonical file, or a directory holding a raw ``.content``/``.cites`` pair."""
    path = Path(path)
    if path.is_dir():
        return load_cora_content(*find_raw_files(path))
    return load_canonical(path)

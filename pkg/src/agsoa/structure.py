"""Structure-optimization phase: pull the perturbed graph back inside the degree budget.

Nodes are ranked against the target twice, by feature distance and by
homogeneity (cosine between the target features and the degree-scaled
features of the node).  The nodes ranked in the top ``k`` of both lists
are candidates, and target edges to them are toggled until the change in
total degree is at most the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edits import ADD, DELETE, Edit, pair
from .graph import Graph, degree_info


class BudgetUnsatisfiable(RuntimeError):
    pass


@dataclass(frozen=True)
class SimilarityScores:
    fs_norm: np.ndarray
    ho: np.ndarray
    target: int


@dataclass(frozen=True)
class BudgetSpec:
    """Degree budget ``delta = ceil(alpha * d_tar)`` on the clean graph."""

    alpha: float
    delta: int

    @classmethod
    def for_target(cls, g_clean: Graph, target: int, alpha: float = 0.2) -> "BudgetSpec":
        if not 0 <= alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        d_tar = int(g_clean.adjacency[target].sum())
        # round first so that e.g. 0.2 * 10 does not ceil to 3
        return cls(alpha=alpha, delta=int(math.ceil(round(alpha * d_tar, 9))))


def similarity_scores(g: Graph, target: int, d_tar: int | None = None) -> SimilarityScores:
    """Feature distance and homogeneity of every node relative to ``target``.

    ``fs_norm[i] = ||X_i - X_target||_2``.  ``ho[i]`` is the cosine between
    ``X_i / sqrt(d_target * d_i)`` and ``X_target``; nodes of degree zero,
    or with all-zero features, get ``-1``.
    """
    X = g.features
    x_t = X[target]
    t_norm = np.linalg.norm(x_t)
    if t_norm == 0:
        raise ValueError("degenerate target features")
    degrees = g.adjacency.sum(axis=1).astype(np.float64)
    if d_tar is None:
        d_tar = degrees[target]
    fs_norm = np.linalg.norm(X - x_t, axis=1)

    ho = np.full(g.n, -1.0)
    if d_tar > 0:
        ok = degrees > 0
        r = X[ok] / (np.sqrt(d_tar) * np.sqrt(degrees[ok]))[:, None]
        r_norm = np.linalg.norm(r, axis=1)
        nz = r_norm > 0
        cos = np.full(r.shape[0], -1.0)
        cos[nz] = (r[nz] @ x_t) / (r_norm[nz] * t_norm)
        ho[ok] = np.clip(cos, -1.0, 1.0)
    return SimilarityScores(fs_norm=fs_norm, ho=ho, target=target)


def topk_overlap(scores: SimilarityScores, k: int) -> set[int]:
    """Nodes in both the ``k`` smallest ``fs_norm`` and the ``k`` largest ``ho``."""
    n = scores.fs_norm.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n={n}, got {k}")
    others = np.delete(np.arange(n), scores.target)
    by_fs = others[np.argsort(scores.fs_norm[others], kind="stable")][:k]
    by_ho = others[np.argsort(-scores.ho[others], kind="stable")][:k]
    return set(by_fs.tolist()) & set(by_ho.tolist())


def run_structure_phase(g_perturbed: Graph, g_clean: Graph, target: int, budget: BudgetSpec,
                        k: int = 10, exclude=(), step_offset: int = 0) -> tuple[Graph, list[Edit]]:
    """Toggle target edges to overlap nodes until ``|d_G - d_G'| <= delta``.

    Each iteration recomputes the scores on the current graph and toggles the
    edge to the most feature-similar overlap node whose toggle moves the
    total-degree difference toward the budget (delete when the perturbed
    graph has too many edges, add when it has too few).  ``k`` is doubled,
    up to ``n - 1``, when no such node exists.  Pairs in ``exclude`` and
    pairs already toggled here are never touched.
    """
    clean_total = degree_info(g_clean).total
    used = {pair(*p) for p in exclude}
    adj = np.array(g_perturbed.adjacency)
    cur = g_perturbed
    edits: list[Edit] = []
    n = g_clean.n
    step = step_offset
    while abs(int(adj.sum()) - clean_total) > budget.delta:
        need_delete = int(adj.sum()) > clean_total
        scores = similarity_scores(cur, target)
        kk = min(k, n - 1)
        while True:
            overlap = topk_overlap(scores, kk)
            admissible = [
                i for i in overlap
                if pair(target, i) not in used and bool(adj[target, i]) == need_delete
            ]
            if admissible or kk >= n - 1:
                break
            kk = min(2 * kk, n - 1)
        if not admissible:
            raise BudgetUnsatisfiable(
                f"budget unsatisfiable for target {target}: "
                f"|d_G - d_G'| = {abs(int(adj.sum()) - clean_total)} > {budget.delta}"
            )
        node = min(admissible, key=lambda i: (scores.fs_norm[i], i))
        i, j = pair(target, node)
        adj[i, j] = adj[j, i] = 1 - adj[i, j]
        cur = g_perturbed.with_adjacency(adj.copy())
        used.add((i, j))
        edits.append(Edit(step=step, i=i, j=j, action=DELETE if need_delete else ADD,
                          score=float(scores.fs_norm[node]), phase="structure"))
        step += 1
    return cur, edits

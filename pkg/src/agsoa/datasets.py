"""Synthetic citation-style graphs for tests and demos."""

from __future__ import annotations

import numpy as np

from .graph import Graph, stratified_split


def random_graph(n: int, d: int, c: int, p_edge: float = 0.25, seed: int = 0,
                 binary_features: bool = False) -> Graph:
    """Erdos-Renyi structure with random features and labels."""
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p_edge, 1)
    adj = (upper | upper.T).astype(np.int8)
    if binary_features:
        X = (rng.random((n, d)) < 0.3).astype(np.float64)
        X[X.sum(axis=1) == 0, 0] = 1.0
    else:
        X = rng.random((n, d))
    labels = np.arange(n) % c
    rng.shuffle(labels)
    return Graph(adjacency=adj, features=X, labels=labels)


def citation_graph(n: int = 600, d: int = 300, c: int = 5, avg_degree: float = 4.0,
                   homophily: float = 0.75, words_per_node: int = 18, topic_share: float = 0.2,
                   seed: int = 0, split: tuple[float, float] = (0.1, 0.1)) -> Graph:
    """Contextual stochastic block model with bag-of-words features.

    Each class owns a block of ``d // c`` words; a node draws roughly
    ``words_per_node`` words, a ``topic_share`` fraction of them from its own
    class block and the rest uniformly.  A ``homophily`` fraction of edges
    join same-class nodes.  The result carries a seeded stratified split.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, c, size=n)
    block = d // c
    p_word = np.full((c, d), (1 - topic_share) * words_per_node / d)
    for k in range(c):
        p_word[k, k * block:(k + 1) * block] += topic_share * words_per_node / block
    X = (rng.random((n, d)) < np.clip(p_word[labels], 0, 1)).astype(np.float64)
    empty = X.sum(axis=1) == 0
    X[empty, rng.integers(0, d, size=empty.sum())] = 1.0

    m = int(round(avg_degree * n / 2))
    same = labels[:, None] == labels[None, :]
    n_same = (np.triu(same, 1)).sum()
    n_diff = n * (n - 1) // 2 - n_same
    p_in = min(1.0, homophily * m / n_same)
    p_out = min(1.0, (1 - homophily) * m / n_diff)
    probs = np.where(same, p_in, p_out)
    upper = np.triu(rng.random((n, n)) < probs, 1)
    adj = (upper | upper.T).astype(np.int8)
    g = Graph(adjacency=adj, features=X, labels=labels)
    return stratified_split(g, seed=seed, train=split[0], val=split[1])

"""Reference targeted attacks: Random, GradArgmax, FGA and momentum gradient (MGA-style).

All of them only touch edges incident to the target and, apart from Random,
obey the same sign rule as the average-gradient phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gcn
from .avg_gradient import TARGET_SCOPE, select_edge
from .edits import ADD, DELETE, Edit, Exhausted, feasible_mask, pair
from .graph import Graph, flip_edge

BASELINE_KINDS = ("random", "grad_argmax", "fga", "momentum")


@dataclass(frozen=True)
class BaselineConfig:
    kind: str = "fga"
    budget: int = 1
    p: float = 1.0
    beta: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline {self.kind!r}")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if not 0 < self.p <= 1:
            raise ValueError("p must lie in (0, 1]")


def random_attack(g: Graph, target: int, cfg: BaselineConfig) -> tuple[Graph, list[Edit]]:
    """Sample ``budget`` distinct partners uniformly; flip each with probability ``p``."""
    rng = np.random.default_rng(cfg.seed)
    others = np.delete(np.arange(g.n), target)
    picks = rng.choice(others, size=min(cfg.budget, others.size), replace=False)
    cur, edits = g, []
    for step, j in enumerate(picks.tolist()):
        if rng.random() >= cfg.p:
            continue
        i, j = pair(target, j)
        action = DELETE if cur.adjacency[i, j] else ADD
        cur = flip_edge(cur, i, j)
        edits.append(Edit(step=step, i=i, j=j, action=action, score=0.0, phase="random"))
    return cur, edits


def grad_argmax_attack(model: gcn.GcnModel, g: Graph, target: int,
                       cfg: BaselineConfig) -> tuple[Graph, list[Edit]]:
    """One gradient on the clean graph; flip the top-``budget`` feasible target pairs at once."""
    row = gcn.loss_grad_adjacency(model, g, [target])[target]
    ok = feasible_mask(row, g.adjacency[target])
    ok[target] = False
    cand = np.flatnonzero(ok)
    # stable sort keeps the lowest node id first among equal magnitudes
    order = cand[np.argsort(-np.abs(row[cand]), kind="stable")][:cfg.budget]
    adj = np.array(g.adjacency)
    edits = []
    for step, j in enumerate(order.tolist()):
        i, jj = pair(target, j)
        action = DELETE if adj[i, jj] else ADD
        adj[i, jj] = adj[jj, i] = 1 - adj[i, jj]
        edits.append(Edit(step=step, i=i, j=jj, action=action, score=float(row[j])))
    return g.with_adjacency(adj), edits


def _iterative(model, g, target, budget, beta=None):
    cur, edits, used = g, [], set()
    momentum = None
    for step in range(budget):
        B = gcn.loss_grad_adjacency(model, cur, [target])
        if beta is None:
            score = B
        else:
            norm = np.abs(B).sum()
            if norm == 0:
                break
            momentum = B / norm if momentum is None else beta * momentum + B / norm
            score = momentum
        try:
            i, j, action = select_edge(score, cur, TARGET_SCOPE, target, used)
        except Exhausted:
            break
        cur = flip_edge(cur, i, j)
        used.add((i, j))
        edits.append(Edit(step=step, i=i, j=j, action=action, score=float(score[i, j])))
    return cur, edits


def fga_attack(model: gcn.GcnModel, g: Graph, target: int,
               cfg: BaselineConfig) -> tuple[Graph, list[Edit]]:
    """Greedy: recompute the gradient each step, flip the best feasible target pair."""
    return _iterative(model, g, target, cfg.budget)


def momentum_attack(model: gcn.GcnModel, g: Graph, target: int,
                    cfg: BaselineConfig) -> tuple[Graph, list[Edit]]:
    """Like FGA, scoring with ``m <- beta * m + B / ||B||_1``."""
    return _iterative(model, g, target, cfg.budget, beta=cfg.beta)


def run_baseline(model: gcn.GcnModel, g: Graph, target: int, cfg: BaselineConfig):
    if cfg.kind == "random":
        return random_attack(g, target, cfg)
    fn = {"grad_argmax": grad_argmax_attack, "fga": fga_attack, "momentum": momentum_attack}[cfg.kind]
    return fn(model, g, target, cfg)

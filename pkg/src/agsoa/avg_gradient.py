"""Average-gradient perturbation phase.

Every iteration recomputes the adjacency gradient on the current perturbed
graph, folds it into a running mean over all iterations so far, feeds the
L1-normalized mean into a momentum accumulator, and flips the feasible pair
with the largest absolute accumulated score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gcn
from .edits import ADD, DELETE, Edit, Exhausted, feasible_mask, pair
from .graph import Graph

TARGET_SCOPE = "target"
GLOBAL_SCOPE = "global"


class DegenerateGradient(ArithmeticError):
    pass


@dataclass
class GradientPhaseConfig:
    """Settings for :func:`run_gradient_phase`.

    ``T=None`` means "use the caller's edge budget".
    """

    T: int | None = None
    mu: float = 0.6
    scope: str = TARGET_SCOPE
    use_continuous_surrogate: bool = False

    def __post_init__(self):
        if self.T is not None and self.T < 1:
            raise ValueError("T must be at least 1")
        if self.scope not in (TARGET_SCOPE, GLOBAL_SCOPE):
            raise ValueError(f"unknown candidate scope {self.scope!r}")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")


class AvgGradientState:
    """Running mean of submitted gradients plus a momentum accumulator.

    ``count`` gradients have been submitted; ``avg == grad_sum / count``.
    """

    def __init__(self, n: int, mu: float = 0.6):
        self.mu = mu
        self.count = 0
        self.grad_sum = np.zeros((n, n))
        self.avg = np.zeros((n, n))
        self.momentum = np.zeros((n, n))

    @property
    def t(self) -> int:
        """Zero-based index of the latest gradient (-1 before the first)."""
        return self.count - 1

    def update(self, grad: np.ndarray) -> "AvgGradientState":
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.grad_sum.shape:
            raise ValueError(f"gradient shape {grad.shape} != {self.grad_sum.shape}")
        if not np.allclose(grad, grad.T, rtol=1e-10, atol=1e-14):
            raise ValueError("gradient must be symmetric")
        self.grad_sum += grad
        self.count += 1
        self.avg = self.grad_sum / self.count
        np.fill_diagonal(self.avg, 0.0)
        return self

    def momentum_step(self) -> np.ndarray:
        norm = np.abs(self.avg).sum()
        if norm == 0:
            raise DegenerateGradient("degenerate gradient: average gradient is all zero")
        self.momentum = self.mu * self.momentum + self.avg / norm
        return self.momentum


def update_average(state: AvgGradientState, new_grad: np.ndarray) -> AvgGradientState:
    return state.update(new_grad)


def momentum_step(state: AvgGradientState) -> np.ndarray:
    return state.momentum_step()


def select_edge(score: np.ndarray, g: Graph, scope: str = TARGET_SCOPE, target: int | None = None,
                exclude=()) -> tuple[int, int, str]:
    """Pick the feasible pair with the largest ``|score|``.

    Feasible means a positive score on an absent edge (add) or a negative
    score on a present edge (delete).  Pairs in ``exclude`` are skipped.
    Ties go to the lexicographically smallest ``(i, j)`` with ``i < j``.

    Raises
    ------
    Exhausted
        If no feasible candidate exists.
    """
    if scope == TARGET_SCOPE:
        if target is None or not 0 <= target < g.n:
            raise IndexError(f"invalid target {target!r}")
        row = score[target]
        ok = feasible_mask(row, g.adjacency[target])
        ok[target] = False
        for a, b in exclude:
            if a == target:
                ok[b] = False
            elif b == target:
                ok[a] = False
        if not ok.any():
            raise Exhausted(f"no feasible edge incident to node {target}")
        mag = np.where(ok, np.abs(row), -np.inf)
        j = int(np.argmax(mag))
        i, j = pair(target, j)
    elif scope == GLOBAL_SCOPE:
        ok = feasible_mask(score, g.adjacency)
        ok &= np.triu(np.ones_like(ok), 1)
        for a, b in exclude:
            a, b = pair(a, b)
            ok[a, b] = False
        if not ok.any():
            raise Exhausted("no feasible edge in the graph")
        mag = np.where(ok, np.abs(score), -np.inf)
        i, j = (int(v) for v in np.unravel_index(np.argmax(mag), mag.shape))
    else:
        raise ValueError(f"unknown candidate scope {scope!r}")
    return i, j, DELETE if g.adjacency[i, j] else ADD


def run_gradient_phase(model: gcn.GcnModel, g: Graph, target: int | None, cfg: GradientPhaseConfig,
                       *, budget: int | None = None, loss_nodes=None, loss_labels=None,
                       exclude=()) -> tuple[Graph, list[Edit]]:
    """Run up to ``T`` average-gradient iterations, one edge flip each.

    Parameters
    ----------
    model : GcnModel
        Trained surrogate.
    g : Graph
        Starting graph; it is not modified.
    target : int or None
        Attacked node.  The loss defaults to this node's cross-entropy.
    cfg : GradientPhaseConfig
    budget : int, optional
        Used as ``T`` when ``cfg.T`` is None.
    loss_nodes, loss_labels : optional
        Override the node set and labels of the attacked loss (untargeted use).
    exclude : iterable of pairs
        Pairs that may not be flipped.

    Returns
    -------
    (Graph, list of Edit)
        The perturbed graph and the flips in application order.  Fewer than
        ``T`` flips are returned when candidates run out.
    """
    T = cfg.T if cfg.T is not None else budget
    if T is None:
        raise ValueError("either cfg.T or budget must be given")
    if T <= 0:
        return g, []
    nodes = [target] if loss_nodes is None else loss_nodes
    labels = g.labels if loss_labels is None else np.asarray(loss_labels)

    state = AvgGradientState(g.n, cfg.mu)
    used = {pair(*p) for p in exclude}
    adj = np.array(g.adjacency)
    cur = g
    edits: list[Edit] = []
    for step in range(T):
        if cfg.use_continuous_surrogate and state.count:
            point = np.clip(adj + cfg.mu * state.avg, 0.0, 1.0)
            np.fill_diagonal(point, 0.0)
        else:
            point = adj
        grad = gcn.adjacency_gradient(model, point, g.features, nodes, labels)
        state.update(grad)
        try:
            score = state.momentum_step()
            i, j, action = select_edge(score, cur, cfg.scope, target, used)
        except (Exhausted, DegenerateGradient):
            break
        adj[i, j] = adj[j, i] = 1 - adj[i, j]
        cur = g.with_adjacency(adj.copy())
        used.add((i, j))
        edits.append(Edit(step=step, i=i, j=j, action=action, score=float(score[i, j])))
    return cur, edits

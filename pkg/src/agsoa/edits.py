"""Edge-edit records and the sign-feasibility rule shared by every attack."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph

ADD = "add"
DELETE = "delete"


class Exhausted(RuntimeError):
    """No feasible candidate edge remains."""


@dataclass(frozen=True)
class Edit:
    step: int
    i: int
    j: int
    action: str
    score: float
    phase: str = "gradient"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Edit":
        return cls(**d)


def pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def is_feasible(score: float, edge_present: bool) -> bool:
    """Add only where the score is positive, delete only where it is negative."""
    return (score > 0 and not edge_present) or (score < 0 and edge_present)


def feasible_mask(score: np.ndarray, present: np.ndarray) -> np.ndarray:
    present = present.astype(bool)
    return ((score > 0) & ~present) | ((score < 0) & present)


def apply_edits(g: Graph, edits) -> Graph:
    """Replay ``edits`` on ``g``; each one must match the current edge state."""
    adj = np.array(g.adjacency)
    for e in edits:
        if e.i == e.j:
            raise ValueError("self-loop modification forbidden")
        present = bool(adj[e.i, e.j])
        if present != (e.action == DELETE):
            raise ValueError(f"edit {e} does not match the current edge state")
        adj[e.i, e.j] = adj[e.j, e.i] = 0 if present else 1
    return g.with_adjacency(adj)


def edits_feasible(g: Graph, edits) -> bool:
    """Post-hoc check that every gradient-scored edit obeyed the sign rule when applied."""
    adj = np.array(g.adjacency)
    for e in edits:
        present = bool(adj[e.i, e.j])
        if e.phase == "gradient" and not is_feasible(e.score, present):
            return False
        adj[e.i, e.j] = adj[e.j, e.i] = 1 - adj[e.i, e.j]
    return True

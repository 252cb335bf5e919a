import itertools

import numpy as np
import pytest

from agsoa import gcn
from agsoa.attack import AgsoaConfig, agsoa_attack, run_attack
from agsoa.baselines import (BaselineConfig, fga_attack, grad_argmax_attack, momentum_attack,
                             random_attack)
from agsoa.edits import apply_edits, edits_feasible
from agsoa.graph import Graph

from conftest import toy_instance
from oracles import reference_fga


def graph(n, edges):
    A = np.zeros((n, n), dtype=int)
    for i, j in edges:
        A[i, j] = A[j, i] = 1
    return Graph(A, np.eye(n), np.zeros(n, dtype=int))


def sym(n, entries):
    M = np.zeros((n, n))
    for (i, j), v in entries.items():
        M[i, j] = M[j, i] = v
    return M


def triples(edits):
    return [(e.i, e.j, e.action) for e in edits]


@pytest.fixture
def fixed_gradients(monkeypatch):
    """Replace the adjacency gradient by a scripted sequence of matrices."""
    def install(*mats):
        seq = list(mats)
        calls = []

        def fake(model, g, node_set, labels=None):
            calls.append(g)
            return seq[min(len(calls), len(seq)) - 1]
        monkeypatch.setattr(gcn, "loss_grad_adjacency", fake)
        return calls
    return install


# -- random -------------------------------------------------------------------------

def test_random_flips_the_only_pair():
    h, edits = random_attack(graph(2, []), 0, BaselineConfig("random", budget=1))
    assert triples(edits) == [(0, 1, "add")]
    assert h.m == 1


def test_random_is_seeded():
    g, _ = toy_instance(0)
    a = random_attack(g, 3, BaselineConfig("random", budget=3, seed=5))[1]
    b = random_attack(g, 3, BaselineConfig("random", budget=3, seed=5))[1]
    assert a == b


def test_random_draws_distinct_target_pairs():
    g = graph(5, [(0, 1), (2, 3)])
    space = set(itertools.combinations([(0, 2), (1, 2), (2, 3), (2, 4)], 3))
    seen = set()
    for seed in range(40):
        h, edits = random_attack(g, 2, BaselineConfig("random", budget=3, seed=seed))
        pairs = [tuple(sorted((e.i, e.j))) for e in edits]
        assert len(set(pairs)) == 3
        assert all(2 in p for p in pairs)
        assert apply_edits(g, edits).equals(h)
        seen.add(tuple(sorted(pairs)))
    # every 3-subset of the 4 partners is reachable
    assert seen == space


def test_random_with_small_p_can_skip_flips():
    g = graph(6, [])
    counts = [len(random_attack(g, 0, BaselineConfig("random", budget=5, p=0.3, seed=s))[1])
              for s in range(30)]
    assert min(counts) < 5 and max(counts) <= 5


# -- GradArgmax -----------------------------------------------------------------------

def test_grad_argmax_takes_top_two_feasible(fixed_gradients):
    g = graph(4, [(0, 2)])
    # (0,2) is present with a positive score, so it cannot be deleted
    fixed_gradients(sym(4, {(0, 1): 0.3, (0, 2): 0.9, (0, 3): 0.5}))
    _, edits = grad_argmax_attack(None, g, 0, BaselineConfig("grad_argmax", budget=2))
    assert triples(edits) == [(0, 3, "add"), (0, 1, "add")]


def test_grad_argmax_three_nodes(fixed_gradients):
    g = graph(3, [(0, 1)])
    fixed_gradients(sym(3, {(0, 1): -0.2, (0, 2): 0.4}))
    _, edits = grad_argmax_attack(None, g, 0, BaselineConfig("grad_argmax", budget=2))
    assert triples(edits) == [(0, 2, "add"), (0, 1, "delete")]


def test_grad_argmax_without_feasible_entries(fixed_gradients):
    g = graph(3, [(0, 1)])
    fixed_gradients(sym(3, {(0, 1): 0.2, (0, 2): -0.4}))
    h, edits = grad_argmax_attack(None, g, 0, BaselineConfig("grad_argmax", budget=2))
    assert edits == [] and h.equals(g)


def test_grad_argmax_budget_one_equals_fga_first_step():
    for seed in range(5):
        g, m = toy_instance(seed)
        a = grad_argmax_attack(m, g, 1, BaselineConfig("grad_argmax", budget=1))[1]
        b = fga_attack(m, g, 1, BaselineConfig("fga", budget=1))[1]
        assert triples(a) == triples(b)


# -- FGA ------------------------------------------------------------------------------

def test_fga_budget_one_equals_single_gradient_step():
    for seed in range(5):
        g, m = toy_instance(seed)
        a = fga_attack(m, g, 2, BaselineConfig("fga", budget=1))[1]
        b = agsoa_attack(m, g, 2, AgsoaConfig(mu=0.0, T=1)).edits
        assert triples(a) == triples(b[:1])


@pytest.mark.parametrize("seed", range(4))
def test_fga_matches_reference_loop(seed):
    g, m = toy_instance(seed)
    _, edits = fga_attack(m, g, 5, BaselineConfig("fga", budget=2))
    assert triples(edits) == reference_fga(m, g, 5, 2)


def test_fga_edits_are_feasible():
    g, m = toy_instance(9, n=10)
    h, edits = fga_attack(m, g, 0, BaselineConfig("fga", budget=4))
    assert edits_feasible(g, edits)
    assert apply_edits(g, edits).equals(h)


# -- momentum ---------------------------------------------------------------------------

def test_momentum_without_decay_is_fga():
    for seed in range(4):
        g, m = toy_instance(seed)
        a = momentum_attack(m, g, 0, BaselineConfig("momentum", budget=3, beta=0.0))[1]
        b = fga_attack(m, g, 0, BaselineConfig("fga", budget=3))[1]
        assert triples(a) == triples(b)


def test_constant_gradient_momentum_equals_fga(fixed_gradients):
    g = graph(5, [(0, 4)])
    B = sym(5, {(0, 1): 0.4, (0, 2): 0.9, (0, 3): 0.1, (0, 4): -0.6})
    fixed_gradients(B)
    a = momentum_attack(None, g, 0, BaselineConfig("momentum", budget=3, beta=0.9))[1]
    fixed_gradients(B)
    b = fga_attack(None, g, 0, BaselineConfig("fga", budget=3))[1]
    assert triples(a) == triples(b) == [(0, 2, "add"), (0, 4, "delete"), (0, 1, "add")]


def test_momentum_keeps_direction_when_the_gradient_flips(fixed_gradients):
    g = graph(4, [])
    g1 = sym(4, {(0, 1): 1.0, (0, 2): 0.8, (0, 3): 0.1})
    g2 = sym(4, {(0, 1): -5.0, (0, 2): -0.3, (0, 3): 0.4})
    # step 2 momentum on (0,2): 0.9 * 0.8/3.8 - 0.3/11.4 > 0.9 * 0.1/3.8 + 0.4/11.4
    fixed_gradients(g1, g2)
    a = momentum_attack(None, g, 0, BaselineConfig("momentum", budget=2, beta=0.9))[1]
    fixed_gradients(g1, g2)
    b = fga_attack(None, g, 0, BaselineConfig("fga", budget=2))[1]
    assert triples(a) == [(0, 1, "add"), (0, 2, "add")]
    assert triples(b) == [(0, 1, "add"), (0, 3, "add")]


# -- dispatch -----------------------------------------------------------------------------

@pytest.mark.parametrize("kind", ["random", "grad_argmax", "fga", "momentum", "agsoa"])
def test_run_attack_respects_budget_and_is_deterministic(kind):
    g, m = toy_instance(11, n=12, p_edge=0.4)
    target = int(np.argmax(g.adjacency.sum(axis=1)))
    a = run_attack(kind, m, g, target, alpha=0.5, seed=3)
    b = run_attack(kind, m, g, target, alpha=0.5, seed=3)
    assert a.edits == b.edits
    assert a.budget.delta == int(np.ceil(0.5 * g.adjacency[target].sum()))
    if kind == "agsoa":
        diff = abs(int(a.graph.adjacency.sum()) - int(g.adjacency.sum()))
        assert diff <= a.budget.delta
    else:
        assert len(a.edits) <= a.budget.delta


def test_run_attack_rejects_unknown_kind():
    g, m = toy_instance(0)
    with pytest.raises(ValueError):
        run_attack("nettack", m, g, 0)
    with pytest.raises(IndexError):
        run_attack("fga", m, g, 99)

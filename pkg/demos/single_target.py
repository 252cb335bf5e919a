"""
Attacking one node with AGSOA
=============================

Train a surrogate GCN, pick a correctly classified test node, and walk
through the edits made by the averaged-gradient phase and the
structure-optimization phase that follows it.
"""

# %%
import numpy as np

from agsoa import gcn
from agsoa.attack import AgsoaConfig, agsoa_attack
from agsoa.graph import degree_info
from agsoa.harness import select_targets

from _data import demo_graph

g, name = demo_graph(seed=0)
model = gcn.fit(g, cfg=gcn.TrainConfig(learning_rate=0.01, epochs=200, seed=0))
print(f"{name}: n={g.n} m={g.m}  clean test accuracy {gcn.accuracy(model, g, g.test_mask):.3f}")

# %%
# Prefer a target with a few neighbours so both phases have room to act.
candidates = select_targets(g, model, 40, seed=0)
target = max(candidates, key=lambda t: (int(g.adjacency[t].sum()), -t))
probs = gcn.forward(model, g)[target]
print(f"target {target}: degree {int(g.adjacency[target].sum())}, label {g.labels[target]}, "
      f"p(label) {probs[g.labels[target]]:.3f}")

# %%
res = agsoa_attack(model, g, target, AgsoaConfig(alpha=0.5))
print(f"budget delta = {res.budget.delta}")
for e in res.edits:
    print(f"  step {e.step}  {e.phase:9s} {e.action:6s} ({e.i}, {e.j})  score {e.score:+.4f}")

# %%
# The budget bounds the change in total degree, not the number of flips:
# the structure phase adds or removes edges until the change fits.
change = degree_info(res.graph).total - degree_info(g).total
after = gcn.forward(model, res.graph)[target]
print(f"total degree change {change:+d} (|change| <= {res.budget.delta})")
print(f"p(label) {probs[g.labels[target]]:.3f} -> {after[g.labels[target]]:.3f}; "
      f"prediction {int(np.argmax(probs))} -> {int(np.argmax(after))}")

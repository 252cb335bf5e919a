"""
Checking the adjacency gradient against finite differences
===========================================================

The attack ranks edge flips by the derivative of the target's loss with
respect to the (symmetric) adjacency matrix.  Here we compare the analytic
gradient with a joint central difference on a small random graph.
"""

# %%
import numpy as np

from agsoa import gcn
from agsoa.datasets import random_graph
from agsoa.graph import flip_edge, stratified_split

g = stratified_split(random_graph(15, 8, 3, p_edge=0.25, seed=0, binary_features=True), 0, train=0.4, val=0.2)
model = gcn.fit(g, cfg=gcn.TrainConfig(seed=0))
target = int(np.flatnonzero(g.test_mask)[0])
print(f"n={g.n} m={g.m} target={target}")

# %%
# A symmetric perturbation moves A[i, j] and A[j, i] together, so the
# matching difference quotient perturbs both entries at once.  Relaxed
# adjacencies are not valid graphs, so the loss is read off the softmax.
B = gcn.loss_grad_adjacency(model, g, [target])
eps = 1e-4
A = g.adjacency.astype(float)
y = g.labels[target]
F = np.zeros_like(A)
for i in range(g.n):
    for j in range(i + 1, g.n):
        E = np.zeros_like(A)
        E[i, j] = E[j, i] = eps
        lp = -np.log(gcn.forward_adjacency(model, A + E, g.features)[target, y])
        lm = -np.log(gcn.forward_adjacency(model, A - E, g.features)[target, y])
        F[i, j] = F[j, i] = (lp - lm) / (2 * eps)

rel = np.abs(B - F) / np.maximum(np.abs(F), 1e-8)
print(f"max relative error {rel.max():.2e}")

# %%
# The gradient is only a first-order guide: compare it with the exact loss
# change of each single flip touching the target.
base = gcn.loss(model, g, [target])
for j in np.argsort(-np.abs(B[target]))[:5]:
    if j == target:
        continue
    exact = gcn.loss(model, flip_edge(g, target, int(j)), [target]) - base
    sign = 1 - 2 * g.adjacency[target, j]
    print(f"flip ({target},{j}): predicted {sign * B[target, j]:+.4f}  exact {exact:+.4f}")

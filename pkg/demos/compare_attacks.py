"""
Comparing AGSOA with the baseline attacks
=========================================

Run every attack on the same surrogate and target set, then evaluate the
perturbed graphs on the surrogate GCN and on an independently trained SGC.
"""

# %%
from agsoa.harness import ExperimentSpec, run_targeted

from _data import demo_dataset_path

path, name = demo_dataset_path()
rows = []
for kind in ("random", "grad_argmax", "fga", "momentum", "agsoa"):
    spec = ExperimentSpec(dataset=path, dataset_name=name, attack=kind, n_targets=40,
                          eval_models=("GCN", "SGC"), learning_rate=0.01)
    rep = run_targeted(spec, seed=0)
    rows.append((kind, rep.mr["GCN"], rep.mr["SGC"], sum(len(r.edits) for r in rep.records)))

# %%
print(f"{name}: misclassification rate over 40 targets, alpha = 0.2")
print(f"{'attack':12s} {'GCN':>6s} {'SGC':>6s} {'edits':>6s}")
for kind, mr_gcn, mr_sgc, n_edits in rows:
    print(f"{kind:12s} {mr_gcn:6.3f} {mr_sgc:6.3f} {n_edits:6d}")

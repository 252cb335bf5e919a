"""
Global (untargeted) attack budgets
==================================

The same machinery attacks the whole graph when the loss covers every node
and the flip budget is a fraction of the edge count.
"""

# %%
from agsoa.harness import ExperimentSpec, run_untargeted

from _data import demo_dataset_path

path, name = demo_dataset_path()
print(f"{name}: misclassification rate on test nodes")
for budget in (0.0, 0.01, 0.03, 0.05):
    spec = ExperimentSpec(dataset=path, dataset_name=name, mode="untargeted", untargeted_budget=budget,
                          learning_rate=0.01)
    rep = run_untargeted(spec, seed=0)
    print(f"  {budget:4.0%} of edges ({len(rep.edits):3d} flips): MR {rep.mr['GCN']:.3f}")

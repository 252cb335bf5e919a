"""Targeted structure attacks on graph convolutional networks.

The AGSOA attack combines an average-gradient perturbation phase with a
similarity-driven structure-optimization phase that keeps the change in total
degree within ``ceil(alpha * d_target)``.
"""

from .attack import AgsoaConfig, AttackResult, agsoa_attack, run_attack
from .avg_gradient import (AvgGradientState, GradientPhaseConfig, momentum_step, run_gradient_phase,
                           select_edge, update_average)
from .baselines import (BaselineConfig, fga_attack, grad_argmax_attack, momentum_attack,
                        random_attack)
from .edits import Edit, Exhausted, apply_edits
from .gcn import (GcnModel, TrainConfig, fit, forward, init_model, load_checkpoint, loss,
                  loss_grad_adjacency, predict_labels, save_checkpoint, train)
from .graph import (DegreeInfo, Graph, degree_info, flip_edge, load_canonical, load_cora_content,
                    load_graph, normalized_adjacency, save_canonical, stratified_split)
from .harness import (AttackReport, ExperimentSpec, misclassification_rate, run_targeted,
                      run_untargeted, select_targets, write_report)
from .structure import BudgetSpec, SimilarityScores, run_structure_phase, similarity_scores, topk_overlap

__version__ = "0.1.0"

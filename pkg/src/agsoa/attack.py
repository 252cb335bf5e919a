"""AGSOA targeted attack: average-gradient phase followed by structure optimization."""

from __future__ import annotations

from dataclasses import dataclass

from . import gcn
from .avg_gradient import TARGET_SCOPE, GradientPhaseConfig, run_gradient_phase
from .baselines import BASELINE_KINDS, BaselineConfig, run_baseline
from .edits import Edit
from .graph import Graph
from .structure import BudgetSpec, run_structure_phase

ATTACK_KINDS = ("agsoa",) + BASELINE_KINDS


@dataclass(frozen=True)
class AgsoaConfig:
    alpha: float = 0.2
    mu: float = 0.6
    k: int = 10
    T: int | None = None
    scope: str = TARGET_SCOPE
    use_continuous_surrogate: bool = False
    budget: int | None = None  # overrides ceil(alpha * d_tar) when set


@dataclass(frozen=True)
class AttackResult:
    graph: Graph
    edits: list[Edit]
    budget: BudgetSpec


def target_budget(g: Graph, target: int, alpha: float, override: int | None = None) -> BudgetSpec:
    if override is not None:
        if override < 0:
            raise ValueError("budget must be nonnegative")
        return BudgetSpec(alpha=alpha, delta=int(override))
    return BudgetSpec.for_target(g, target, alpha)


def agsoa_attack(model: gcn.GcnModel, g: Graph, target: int,
                 cfg: AgsoaConfig = AgsoaConfig()) -> AttackResult:
    """Attack one target on a private copy of ``g``.

    ``T`` defaults to the budget ``delta``; with ``delta == 0`` no edge is
    touched.  The structure phase never re-toggles a pair flipped by the
    gradient phase.
    """
    if not 0 <= target < g.n:
        raise IndexError(f"target {target} out of range for n={g.n}")
    budget = target_budget(g, target, cfg.alpha, cfg.budget)
    if budget.delta == 0 and cfg.T is None:
        return AttackResult(graph=g, edits=[], budget=budget)
    phase_cfg = GradientPhaseConfig(T=cfg.T, mu=cfg.mu, scope=cfg.scope,
                                    use_continuous_surrogate=cfg.use_continuous_surrogate)
    g1, grad_edits = run_gradient_phase(model, g, target, phase_cfg, budget=budget.delta)
    g2, struct_edits = run_structure_phase(
        g1, g, target, budget, k=cfg.k,
        exclude=[(e.i, e.j) for e in grad_edits], step_offset=len(grad_edits),
    )
    return AttackResult(graph=g2, edits=grad_edits + struct_edits, budget=budget)


def run_attack(kind: str, model: gcn.GcnModel, g: Graph, target: int, *, alpha: float = 0.2,
               budget: int | None = None, seed: int = 0, **params) -> AttackResult:
    """Dispatch any supported attack with the per-target budget ``ceil(alpha * d_tar)``.

    Extra ``params`` go to :class:`AgsoaConfig` or :class:`BaselineConfig`.
    """
    if kind == "agsoa":
        return agsoa_attack(model, g, target, AgsoaConfig(alpha=alpha, budget=budget, **params))
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown attack {kind!r}; choose from {ATTACK_KINDS}")
    if not 0 <= target < g.n:
        raise IndexError(f"target {target} out of range for n={g.n}")
    spec = target_budget(g, target, alpha, budget)
    cfg = BaselineConfig(kind=kind, budget=spec.delta, seed=seed, **params)
    graph, edits = run_baseline(model, g, target, cfg)
    return AttackResult(graph=graph, edits=edits, budget=spec)

"""Experiment runner: target selection, attack fan-out, misclassification rate, reports.

Every targeted attack starts from a fresh copy of the clean graph.  The
default protocol is evasion (the trained model is fixed); ``poisoning=True``
retrains each evaluation model on the perturbed graph instead.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import gcn
from .attack import ATTACK_KINDS, run_attack
from .avg_gradient import GLOBAL_SCOPE, GradientPhaseConfig, run_gradient_phase
from .edits import Edit, apply_edits
from .graph import Graph, degree_info, load_graph, row_normalize, stratified_split

log = logging.getLogger(__name__)

TARGETED = "targeted"
UNTARGETED = "untargeted"

# Defaults that the original experiments never state; echoed in every report.
ASSUMED_DEFAULTS = {
    "weight_decay": "5e-4 (not stated for the original experiments)",
    "dropout": "none",
    "weight_init": "seeded Glorot-uniform",
    "split": "stratified 10/10/80 per seed",
    "early_stopping": "fixed epochs, best-validation weights restored",
    "k": "10 (top-k overlap size)",
    "random_p": "1.0",
}

CSV_COLUMNS = ["dataset", "mode", "attack", "budget", "model", "seed", "n_targets", "mr", "mr_std"]


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: str
    dataset_name: str = ""
    attack: str = "agsoa"
    attack_params: dict = field(default_factory=dict)
    alpha: float = 0.2
    budget: int | None = None
    n_targets: int = 100
    seeds: tuple = (0,)
    eval_models: tuple = (gcn.GCN,)
    mode: str = TARGETED
    untargeted_budget: float = 0.05
    hidden: int = 64
    epochs: int = 200
    learning_rate: float = 0.001
    weight_decay: float = 5e-4
    split_train: float = 0.1
    split_val: float = 0.1
    row_normalize: bool = False
    poisoning: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.attack not in ATTACK_KINDS:
            raise ValueError(f"unknown attack {self.attack!r}")
        if self.mode not in (TARGETED, UNTARGETED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == UNTARGETED and not 0 <= self.untargeted_budget <= 0.1:
            raise ValueError("untargeted budget must lie in [0, 0.1]")
        if self.n_targets < 1:
            raise ValueError("n_targets must be positive")
        bad = set(self.eval_models) - set(gcn.MODEL_KINDS)
        if bad:
            raise ValueError(f"unknown evaluation model(s) {sorted(bad)}")
        if not self.dataset_name:
            object.__setattr__(self, "dataset_name", Path(self.dataset).stem or self.dataset)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "eval_models", tuple(self.eval_models))

    @property
    def train_config(self) -> dict:
        return dict(learning_rate=self.learning_rate, epochs=self.epochs, weight_decay=self.weight_decay)


@dataclass
class TargetRecord:
    target: int
    label: int
    degree: int
    delta: int
    edits: list
    clean_pred: dict
    post_pred: dict
    degree_change: int
    budget_ok: bool
    error: str | None = None

    @property
    def success(self) -> dict:
        return {k: v != self.label for k, v in self.post_pred.items()}


@dataclass
class AttackReport:
    dataset: str
    mode: str
    attack: str
    budget: float
    seed: int
    component_seeds: dict
    config: dict
    records: list
    mr: dict
    clean_accuracy: dict
    n_targets: int
    successes: dict
    edits: list = field(default_factory=list)
    wall_clock: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_clock")
        for rec, obj in zip(d["records"], self.records):
            rec["success"] = obj.success
        return d


def misclassification_rate(records, model: str = gcn.GCN) -> float:
    """Fraction of records whose post-attack prediction differs from the true label."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    return sum(r.post_pred[model] != r.label for r in records) / len(records)


def component_seeds(seed: int) -> dict:
    split, train, targets, transfer = np.random.SeedSequence(seed).generate_state(4)
    return {"split": int(split), "train": int(train), "targets": int(targets), "transfer": int(transfer)}


def select_targets(g: Graph, model: gcn.GcnModel, count: int, seed: int) -> list[int]:
    """Seeded uniform sample of test nodes the clean model classifies correctly."""
    pred = gcn.predict_labels(model, g)
    correct = np.flatnonzero(g.test_mask & (pred == g.labels))
    if count > correct.size:
        raise ValueError(
            f"requested {count} targets but only {correct.size} of "
            f"{int(g.test_mask.sum())} test nodes are classified correctly"
        )
    rng = np.random.default_rng(seed)
    return sorted(int(v) for v in rng.choice(correct, size=count, replace=False))


@lru_cache(maxsize=8)
def _load_cached(path: str, normalize: bool) -> Graph:
    if path.startswith("synthetic"):
        from .datasets import citation_graph

        # "synthetic:n=300:homophily=0.8" passes keyword arguments through
        kwargs = {}
        for item in path.split(":")[1:]:
            key, val = item.split("=")
            kwargs[key.strip()] = float(val) if "." in val else int(val)
        g = citation_graph(**kwargs)
    else:
        g = load_graph(path)
    return row_normalize(g) if normalize else g


@lru_cache(maxsize=16)
def _split_cached(path: str, normalize: bool, split_seed: int, train: float, val: float) -> Graph:
    return stratified_split(_load_cached(path, normalize), split_seed, train, val)


def load_dataset(spec: ExperimentSpec, split_seed: int) -> Graph:
    """Load and split; repeated calls share one immutable graph."""
    return _split_cached(spec.dataset, spec.row_normalize, split_seed, spec.split_train, spec.split_val)


_model_cache: dict = {}


def trained_model(g: Graph, kind: str, seed: int, hidden: int = 64, **train_kw) -> gcn.GcnModel:
    """Train (memoized on graph identity, kind, seed and settings)."""
    key = (id(g), kind, seed, hidden, tuple(sorted(train_kw.items())))
    hit = _model_cache.get(key)
    if hit is not None and hit[0] is g:
        return hit[1]
    model = gcn.fit(g, kind=kind, hidden=hidden, cfg=gcn.TrainConfig(seed=seed, **train_kw))
    if len(_model_cache) > 16:
        _model_cache.clear()
    _model_cache[key] = (g, model)
    return model


def _target_seed(seed: int, target: int) -> int:
    return int(np.random.SeedSequence([seed, target]).generate_state(1)[0])


def _evaluate(models: dict, g_attacked: Graph, nodes, spec: ExperimentSpec, seeds: dict) -> dict:
    out = {}
    for name, model in models.items():
        if spec.poisoning:
            model = gcn.fit(g_attacked, kind=name, hidden=spec.hidden,
                            cfg=gcn.TrainConfig(seed=seeds[name], **spec.train_config))
        out[name] = gcn.predict_labels(model, g_attacked)[nodes]
    return out


def _attack_one(spec, seed, g, surrogate, models, model_seeds, target):
    clean_pred = {name: int(gcn.predict_labels(m, g)[target]) for name, m in models.items()}
    params = dict(spec.attack_params)
    try:
        res = run_attack(spec.attack, surrogate, g, target, alpha=spec.alpha, budget=spec.budget,
                         seed=_target_seed(seed, target), **params)
        edits, attacked, delta, error = res.edits, res.graph, res.budget.delta, None
    except Exception as exc:  # recorded per target, never fatal
        log.warning("target %d failed: %s", target, exc)
        edits, attacked, error = [], g, f"{type(exc).__name__}: {exc}"
        delta = 0
    post = _evaluate(models, attacked, [target], spec, model_seeds)
    change = degree_info(attacked).total - degree_info(g).total
    if spec.attack == "agsoa":
        ok = abs(change) <= delta
    else:
        ok = len(edits) <= delta
    return TargetRecord(
        target=target,
        label=int(g.labels[target]),
        degree=int(g.adjacency[target].sum()),
        delta=int(delta),
        edits=[e.to_dict() for e in edits],
        clean_pred=clean_pred,
        post_pred={k: int(v[0]) for k, v in post.items()},
        degree_change=int(change),
        budget_ok=bool(ok),
        error=error,
    )


def _setup(spec: ExperimentSpec, seed: int):
    seeds = component_seeds(seed)
    g = load_dataset(spec, seeds["split"])
    surrogate = trained_model(g, gcn.GCN, seeds["train"], spec.hidden, **spec.train_config)
    models, model_seeds = {}, {}
    for name in spec.eval_models:
        s = seeds["train"] if name == gcn.GCN else seeds["transfer"]
        model_seeds[name] = s
        models[name] = surrogate if name == gcn.GCN else trained_model(
            g, name, s, spec.hidden, **spec.train_config)
    return seeds, g, surrogate, models, model_seeds


def _config_echo(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    d["seeds"] = list(d["seeds"])
    d["eval_models"] = list(d["eval_models"])
    d.pop("workers")
    d["assumed_defaults"] = ASSUMED_DEFAULTS
    return d


def run_targeted(spec: ExperimentSpec, seed: int | None = None) -> AttackReport:
    """Attack ``n_targets`` correctly classified test nodes independently."""
    seed = spec.seeds[0] if seed is None else seed
    t0 = time.perf_counter()
    seeds, g, surrogate, models, model_seeds = _setup(spec, seed)
    targets = select_targets(g, surrogate, spec.n_targets, seeds["targets"])

    def job(t):
        return _attack_one(spec, seed, g, surrogate, models, model_seeds, t)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(job, targets))
    else:
        records = [job(t) for t in targets]
    records.sort(key=lambda r: r.target)

    mr = {name: misclassification_rate(records, name) for name in models}
    succ = {name: sum(r.post_pred[name] != r.label for r in records) for name in models}
    return AttackReport(
        dataset=spec.dataset_name, mode=TARGETED, attack=spec.attack, budget=spec.alpha, seed=seed,
        component_seeds=seeds, config=_config_echo(spec), records=records, mr=mr,
        clean_accuracy={name: gcn.accuracy(m, g, g.test_mask) for name, m in models.items()},
        n_targets=len(records), successes=succ, wall_clock=time.perf_counter() - t0,
    )


def run_untargeted(spec: ExperimentSpec, seed: int | None = None) -> AttackReport:
    """Average-gradient phase only, global candidates, one shared perturbed graph.

    The attacked loss covers every node, using true labels on the training
    set and the surrogate's clean predictions elsewhere.  The misclassification
    rate is measured over the whole test set.
    """
    seed = spec.seeds[0] if seed is None else seed
    t0 = time.perf_counter()
    seeds, g, surrogate, models, model_seeds = _setup(spec, seed)
    n_flips = int(round(spec.untargeted_budget * g.m))
    pseudo = np.where(g.train_mask, g.labels, gcn.predict_labels(surrogate, g))
    edits: list[Edit] = []
    attacked = g
    if n_flips > 0:
        p = spec.attack_params
        cfg = GradientPhaseConfig(T=n_flips, mu=p.get("mu", 0.6), scope=GLOBAL_SCOPE,
                                  use_continuous_surrogate=p.get("use_continuous_surrogate", False))
        attacked, edits = run_gradient_phase(surrogate, g, None, cfg,
                                             loss_nodes=np.arange(g.n), loss_labels=pseudo)
    test = np.flatnonzero(g.test_mask)
    post = _evaluate(models, attacked, test, spec, model_seeds)
    succ = {name: int((post[name] != g.labels[test]).sum()) for name in models}
    return AttackReport(
        dataset=spec.dataset_name, mode=UNTARGETED, attack=spec.attack,
        budget=spec.untargeted_budget, seed=seed, component_seeds=seeds,
        config=_config_echo(spec), records=[],
        mr={name: succ[name] / test.size for name in models},
        clean_accuracy={name: gcn.accuracy(m, g, g.test_mask) for name, m in models.items()},
        n_targets=int(test.size), successes=succ, edits=[e.to_dict() for e in edits],
        wall_clock=time.perf_counter() - t0,
    )


def run(spec: ExperimentSpec) -> list[AttackReport]:
    """Run every seed of ``spec``."""
    fn = run_targeted if spec.mode == TARGETED else run_untargeted
    return [fn(spec, s) for s in spec.seeds]


def replay(report: AttackReport, record: TargetRecord, model: gcn.GcnModel) -> int:
    """Re-apply a record's edits to the clean graph and predict the target again."""
    seeds = report.component_seeds
    spec = ExperimentSpec(**{k: v for k, v in report.config.items() if k != "assumed_defaults"})
    g = load_dataset(spec, seeds["split"])
    attacked = apply_edits(g, [Edit.from_dict(e) for e in record.edits])
    return int(gcn.predict_labels(model, attacked)[record.target])


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------

def csv_rows(reports) -> list[dict]:
    """Per-seed rows, plus a ``seed=mean`` row for every group with several seeds."""
    rows, groups = [], {}
    for r in reports:
        for model, mr in r.mr.items():
            key = (r.dataset, r.mode, r.attack, r.budget, model)
            groups.setdefault(key, []).append((r.seed, r.n_targets, mr))
    for key, items in groups.items():
        dataset, mode, attack, budget, model = key
        for seed, n, mr in items:
            rows.append(dict(dataset=dataset, mode=mode, attack=attack, budget=f"{budget:g}", model=model,
                             seed=str(seed), n_targets=str(n), mr=f"{mr:.6f}", mr_std=""))
        if len(items) > 1:
            mrs = np.array([mr for _, _, mr in items])
            rows.append(dict(dataset=dataset, mode=mode, attack=attack, budget=f"{budget:g}", model=model,
                             seed="mean", n_targets=str(items[0][1]), mr=f"{mrs.mean():.6f}",
                             mr_std=f"{mrs.std():.6f}"))
    return rows


def write_report(reports, path) -> tuple[Path, Path]:
    """Write ``<path>.json`` (full reports) and ``<path>.csv`` (aggregate table).

    Both files are byte-stable for fixed inputs; wall-clock timings go to a
    separate ``<path>.timing.json``.
    """
    if isinstance(reports, AttackReport):
        reports = [reports]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    json_path, csv_path = path.with_suffix(".json"), path.with_suffix(".csv")
    payload = {"reports": [r.to_dict() for r in reports]}
    json_path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(csv_rows(reports))
    csv_path.write_text(buf.getvalue())
    timing = [{"dataset": r.dataset, "attack": r.attack, "seed": r.seed, "seconds": r.wall_clock}
              for r in reports]
    path.with_suffix(".timing.json").write_text(json.dumps(timing, indent=1) + "\n")
    return json_path, csv_path


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

def read_config(path) -> dict:
    """Flatten an INI file into ``{"section.key": "value"}``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not cp.read(path):
        raise FileNotFoundError(path)
    return {f"{sec}.{key}": val.strip() for sec in cp.sections() for key, val in cp[sec].items()}


def _list(val: str) -> list[str]:
    return [v.strip() for v in val.split(",") if v.strip()]


def _bool(val: str) -> bool:
    if val.lower() in ("1", "true", "yes", "on"):
        return True
    if val.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {val!r}")


def specs_from_config(flat: dict) -> list[ExperimentSpec]:
    """One :class:`ExperimentSpec` per (dataset, attack[, untargeted budget])."""
    known = {
        "dataset.path", "dataset.name", "dataset.row_normalize", "dataset.split_train", "dataset.split_val",
        "model.hidden", "model.epochs", "model.learning_rate", "model.weight_decay",
        "attack.kinds", "attack.alpha", "attack.budget", "attack.mu", "attack.k", "attack.t", "attack.scope",
        "attack.continuous_surrogate", "attack.p", "attack.beta",
        "experiment.mode", "experiment.targets", "experiment.seeds", "experiment.eval_models",
        "experiment.untargeted_budgets", "experiment.poisoning", "experiment.workers",
    }
    flat = {k.lower(): v for k, v in flat.items()}
    unknown = sorted(set(flat) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    if "dataset.path" not in flat:
        raise ValueError("config needs dataset.path")

    get = flat.get
    paths = _list(flat["dataset.path"])
    names = _list(get("dataset.name", "")) or [""] * len(paths)
    if len(names) != len(paths):
        raise ValueError("dataset.name must list one name per dataset.path")
    kinds = _list(get("attack.kinds", "agsoa"))
    common = dict(
        alpha=float(get("attack.alpha", 0.2)),
        budget=int(get("attack.budget")) if get("attack.budget") else None,
        n_targets=int(get("experiment.targets", 100)),
        seeds=tuple(int(s) for s in _list(get("experiment.seeds", "0"))),
        eval_models=tuple(m.upper() for m in _list(get("experiment.eval_models", "GCN"))),
        mode=get("experiment.mode", TARGETED),
        hidden=int(get("model.hidden", 64)),
        epochs=int(get("model.epochs", 200)),
        learning_rate=float(get("model.learning_rate", 0.001)),
        weight_decay=float(get("model.weight_decay", 5e-4)),
        split_train=float(get("dataset.split_train", 0.1)),
        split_val=float(get("dataset.split_val", 0.1)),
        row_normalize=_bool(get("dataset.row_normalize", "false")),
        poisoning=_bool(get("experiment.poisoning", "false")),
        workers=int(get("experiment.workers", 1)),
    )
    budgets = [float(b) for b in _list(get("experiment.untargeted_budgets", "0.05"))]

    specs = []
    for path, name in zip(paths, names):
        for kind in kinds:
            params = {}
            if kind == "agsoa":
                params.update(mu=float(get("attack.mu", 0.6)), k=int(get("attack.k", 10)),
                              scope=get("attack.scope", "target"),
                              use_continuous_surrogate=_bool(get("attack.continuous_surrogate", "false")))
                if get("attack.t"):
                    params["T"] = int(get("attack.t"))
            elif kind == "random":
                params["p"] = float(get("attack.p", 1.0))
            elif kind == "momentum":
                params["beta"] = float(get("attack.beta", 0.9))
            base = ExperimentSpec(dataset=path, dataset_name=name, attack=kind, attack_params=params, **common)
            if base.mode == UNTARGETED:
                if kind != "agsoa":
                    raise ValueError("untargeted mode supports the agsoa attack only")
                specs.extend(replace(base, untargeted_budget=b) for b in budgets)
            else:
                specs.append(base)
    return specs

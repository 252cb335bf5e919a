import json
from dataclasses import replace

import numpy as np
import pytest

from agsoa import gcn, harness
from agsoa.edits import Edit, apply_edits
from agsoa.harness import (AttackReport, ExperimentSpec, TargetRecord, misclassification_rate,
                           run_targeted, run_untargeted, select_targets, write_report)

from conftest import DATA

SYNTH = "synthetic:n=240:d=60:c=3:avg_degree=4.0:seed=2"


def spec(**kw):
    base = dict(dataset=SYNTH, dataset_name="synth", n_targets=8, epochs=60, learning_rate=0.01,
                hidden=16, seeds=(0,))
    base.update(kw)
    return ExperimentSpec(**base)


def record(target, label, post, **kw):
    base = dict(target=target, label=label, degree=1, delta=1, edits=[], clean_pred={"GCN": label},
                post_pred={"GCN": post}, degree_change=0, budget_ok=True)
    base.update(kw)
    return TargetRecord(**base)


# -- misclassification rate --------------------------------------------------------

def test_mr_examples():
    assert misclassification_rate([record(0, 1, 1), record(1, 2, 2)]) == 0.0
    assert misclassification_rate([record(0, 1, 0), record(1, 2, 0)]) == 1.0
    recs = [record(0, 1, 0), record(1, 1, 2), record(2, 0, 1), record(3, 0, 0)]
    assert misclassification_rate(recs) == 0.75


def test_mr_needs_records():
    with pytest.raises(ValueError):
        misclassification_rate([])


# -- target selection ----------------------------------------------------------------

@pytest.fixture(scope="module")
def surrogate_setup():
    s = spec()
    seeds, g, surrogate, models, _ = harness._setup(s, 0)
    return g, surrogate


def test_select_all_correct_test_nodes(surrogate_setup):
    g, m = surrogate_setup
    correct = np.flatnonzero(g.test_mask & (gcn.predict_labels(m, g) == g.labels))
    assert select_targets(g, m, correct.size, seed=1) == correct.tolist()


def test_select_targets_is_seeded_and_correct(surrogate_setup):
    g, m = surrogate_setup
    a = select_targets(g, m, 20, seed=4)
    assert a == select_targets(g, m, 20, seed=4)
    assert len(set(a)) == 20
    pred = gcn.predict_labels(m, g)
    assert all(g.test_mask[t] and pred[t] == g.labels[t] for t in a)


def test_select_too_many_targets_reports_counts(surrogate_setup):
    g, m = surrogate_setup
    with pytest.raises(ValueError, match=r"only \d+ of \d+ test nodes"):
        select_targets(g, m, g.n, seed=0)


# -- targeted runs -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def agsoa_report():
    return run_targeted(spec(eval_models=("GCN", "SGC")))


def test_zero_budget_gives_zero_mr():
    rep = run_targeted(spec(attack="fga", budget=0))
    assert rep.mr["GCN"] == 0.0
    assert all(r.edits == [] for r in rep.records)


def test_report_is_consistent(agsoa_report):
    rep = agsoa_report
    assert rep.n_targets == 8 == len(rep.records)
    for name in ("GCN", "SGC"):
        assert rep.mr[name] == rep.successes[name] / rep.n_targets
    assert [r.target for r in rep.records] == sorted(r.target for r in rep.records)
    assert all(r.error is None for r in rep.records)


def test_budget_audit(agsoa_report):
    for r in agsoa_report.records:
        assert r.budget_ok
        assert abs(r.degree_change) <= r.delta == int(np.ceil(round(0.2 * r.degree, 9)))


def test_records_replay(agsoa_report):
    s = spec()
    _, _, surrogate, _, _ = harness._setup(s, 0)
    for r in agsoa_report.records:
        assert harness.replay(agsoa_report, r, surrogate) == r.post_pred["GCN"]


def test_transfer_model_is_an_sgc(agsoa_report):
    s = spec(eval_models=("GCN", "SGC"))
    _, g, _, models, seeds = harness._setup(s, 0)
    assert models["SGC"].kind == gcn.SGC
    assert seeds["SGC"] == agsoa_report.component_seeds["transfer"]


def test_serial_and_concurrent_runs_agree(agsoa_report):
    par = run_targeted(spec(eval_models=("GCN", "SGC"), workers=3))
    assert par.records == agsoa_report.records
    assert par.mr == agsoa_report.mr


def test_per_target_errors_are_recorded(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("synthetic failure")
    monkeypatch.setattr(harness, "run_attack", boom)
    rep = run_targeted(spec(n_targets=3))
    assert all(r.error == "RuntimeError: synthetic failure" for r in rep.records)
    assert rep.mr["GCN"] == 0.0


def test_poisoning_retrains(monkeypatch):
    calls = []
    real_fit = gcn.fit

    def counting_fit(*a, **k):
        calls.append(1)
        return real_fit(*a, **k)
    rep = run_targeted(spec(n_targets=2))
    monkeypatch.setattr(gcn, "fit", counting_fit)
    rep_p = run_targeted(spec(n_targets=2, poisoning=True))
    assert len(calls) == 2
    assert rep_p.config["poisoning"] and not rep.config["poisoning"]


# -- untargeted runs ------------------------------------------------------------------------

def test_untargeted_zero_budget_is_clean_error():
    rep = run_untargeted(spec(mode="untargeted", untargeted_budget=0.0))
    assert rep.edits == []
    assert rep.mr["GCN"] == pytest.approx(1 - rep.clean_accuracy["GCN"])


def test_untargeted_budget_audit_and_trend():
    mrs = []
    for b in (0.0, 0.02, 0.05):
        rep = run_untargeted(spec(mode="untargeted", untargeted_budget=b))
        _, g, _, _, _ = harness._setup(spec(), 0)
        assert len(rep.edits) <= round(b * g.m)
        attacked = apply_edits(g, [Edit.from_dict(e) for e in rep.edits])
        assert attacked.m - g.m == sum(1 if e["action"] == "add" else -1 for e in rep.edits)
        mrs.append(rep.mr["GCN"])
    assert mrs[2] > mrs[0]


def test_untargeted_budget_range():
    with pytest.raises(ValueError):
        spec(mode="untargeted", untargeted_budget=0.2)


# -- report files ------------------------------------------------------------------------

def fake_report(dataset, attack, mr, seed=0, models=("GCN",)):
    return AttackReport(dataset=dataset, mode="targeted", attack=attack, budget=0.2, seed=seed,
                        component_seeds={}, config={}, records=[], mr={m: mr[m] for m in models},
                        clean_accuracy={}, n_targets=100, successes={}, wall_clock=1.5)


def test_empty_sweep_writes_header_only(tmp_path):
    _, csv_path = write_report([], tmp_path / "empty")
    assert csv_path.read_text() == ",".join(harness.CSV_COLUMNS) + "\n"


def test_one_report_one_row(tmp_path, agsoa_report):
    json_path, csv_path = write_report(agsoa_report, tmp_path / "one")
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 3  # header, GCN, SGC
    row = dict(zip(harness.CSV_COLUMNS, lines[1].split(",")))
    data = json.loads(json_path.read_text())["reports"][0]
    assert float(row["mr"]) == pytest.approx(data["mr"]["GCN"], abs=1e-6)
    assert "wall_clock" not in data
    assert json.loads((tmp_path / "one.timing.json").read_text())[0]["seconds"] >= 0


def test_table_shaped_sweep_matches_golden(tmp_path):
    reports = []
    for d, dataset in enumerate(["cora", "citeseer", "pubmed"]):
        for a, attack in enumerate(["random", "fga", "agsoa"]):
            mr = {"GCN": 0.1 * (a + 1) + 0.01 * d, "SGC": 0.1 * (a + 1) + 0.02 * d}
            reports.append(fake_report(dataset, attack, mr, models=("GCN", "SGC")))
    _, csv_path = write_report(reports, tmp_path / "table")
    assert csv_path.read_text() == (DATA / "table_golden.csv").read_text()


def test_multi_seed_rows_get_a_mean(tmp_path):
    reports = [fake_report("cora", "fga", {"GCN": v}, seed=s) for s, v in [(0, 0.5), (1, 0.7)]]
    _, csv_path = write_report(reports, tmp_path / "seeds")
    lines = csv_path.read_text().splitlines()
    assert lines[1:] == [
        "cora,targeted,fga,0.2,GCN,0,100,0.500000,",
        "cora,targeted,fga,0.2,GCN,1,100,0.700000,",
        "cora,targeted,fga,0.2,GCN,mean,100,0.600000,0.100000",
    ]


def test_reports_are_byte_identical(tmp_path):
    a = run_targeted(spec(n_targets=4))
    b = run_targeted(spec(n_targets=4))
    write_report(a, tmp_path / "a")
    write_report(b, tmp_path / "b")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


# -- config -------------------------------------------------------------------------------

def test_config_round_trip(tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text(
        "[dataset]\npath = a.txt, b.txt\nname = A, B\n"
        "[attack]\nkinds = random, agsoa\nalpha = 0.3\nmu = 0.5\n"
        "[experiment]\ntargets = 7\nseeds = 1, 2\neval_models = gcn, sgc\n"
    )
    specs = harness.specs_from_config(harness.read_config(ini))
    assert [(s.dataset_name, s.attack) for s in specs] == [
        ("A", "random"), ("A", "agsoa"), ("B", "random"), ("B", "agsoa")]
    s = specs[1]
    assert s.alpha == 0.3 and s.n_targets == 7 and s.seeds == (1, 2)
    assert s.eval_models == ("GCN", "SGC")
    assert s.attack_params["mu"] == 0.5
    assert specs[0].attack_params == {"p": 1.0}


def test_untargeted_config_expands_budgets():
    flat = {"dataset.path": "x", "experiment.mode": "untargeted",
            "experiment.untargeted_budgets": "0.01, 0.03, 0.05"}
    specs = harness.specs_from_config(flat)
    assert [s.untargeted_budget for s in specs] == [0.01, 0.03, 0.05]


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys"):
        harness.specs_from_config({"dataset.path": "x", "attack.speed": "9"})
    with pytest.raises(ValueError, match="dataset.path"):
        harness.specs_from_config({})


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(attack="nettack")
    with pytest.raises(ValueError):
        spec(eval_models=("GAT",))
    assert replace(spec(), seeds=[3]).seeds == (3,)

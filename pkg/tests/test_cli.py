import json
import logging

import numpy as np
import pytest

from ginidebias.cli import main
from ginidebias.correction import CorrectionFunction, CorrectionMap
from ginidebias.dataset import LabeledPredictionSet, SynthSpec, save_predictions, synthesize


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


def read_json(path):
    return json.loads(path.read_text())


@pytest.fixture
def biased_csv(tmp_path):
    data = synthesize(SynthSpec(4, 120, head_bias=2.0, head_classes={0}, seed=4))
    return save_predictions(data, tmp_path / "preds.csv")


def small_anneal_config(tmp_path, **extra):
    doc = {"anneal": {"max_iterations": 2000, "restarts": 2}, **extra}
    return write_json(tmp_path / "run.json", doc)


# metrics ---------------------------------------------------------------------------


def test_metrics_accuracy_file_agnews(tmp_path, capsys):
    src = write_json(tmp_path / "agnews.json", {"accuracies": [0.85, 0.98, 0.97, 0.19]})
    assert main(["metrics", "--input", str(src)]) == 0
    text = capsys.readouterr().out
    assert "0.75" in text and "0.21" in text and "0.42" in text
    doc = read_json(tmp_path / "agnews.metrics.json")
    assert doc["schema_version"] == 1
    assert round(doc["gini"], 2) == 0.21
    assert round(doc["cobias"], 2) == 0.42
    assert round(doc["top_class_dominance"], 2) == 1.31


def test_metrics_accuracy_file_ddi(tmp_path):
    src = write_json(tmp_path / "ddi.json", {"accuracies": [0, 0.87, 0.03, 0.04, 0.20]})
    assert main(["metrics", "--input", str(src), "--out", str(tmp_path / "o")]) == 0
    doc = read_json(tmp_path / "o" / "ddi.metrics.json")
    assert round(doc["gini"], 2) == 0.67
    assert round(doc["cobias"], 2) == 0.38
    assert round(doc["top_class_dominance"], 1) == 3.8


def test_metrics_prediction_file(biased_csv, tmp_path):
    assert main(["metrics", "--input", str(biased_csv)]) == 0
    doc = read_json(tmp_path / "preds.metrics.json")
    assert doc["n_classes"] == 4 and doc["gini"] > 0.2


def test_metrics_single_class(tmp_path, capsys):
    src = write_json(tmp_path / "one.json", {"accuracies": [0.8]})
    assert main(["metrics", "--input", str(src)]) == 0
    assert "n/a" in capsys.readouterr().out
    doc = read_json(tmp_path / "one.metrics.json")
    assert doc["gini"] == 0.0 and doc["cobias"] is None
    assert main(["metrics", "--input", str(src), "--strict"]) == 5


def test_metrics_all_zero_strict(tmp_path):
    src = write_json(tmp_path / "zero.json", {"accuracies": [0.0, 0.0, 0.0]})
    assert main(["metrics", "--input", str(src)]) == 0
    assert main(["metrics", "--input", str(src), "--strict"]) == 5


def test_metrics_malformed_row_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("prob_0,prob_1,label\n0.5,0.5,0\n0.2,x,1\n")
    assert main(["metrics", "--input", str(bad)]) == 3
    assert "row 2" in capsys.readouterr().err


def test_metrics_unknown_format_is_config_error(tmp_path):
    src = tmp_path / "preds.txt"
    src.write_text("whatever")
    assert main(["metrics", "--input", str(src)]) == 2


def test_missing_input_file(tmp_path):
    assert main(["metrics", "--input", str(tmp_path / "nope.csv")]) == 3


# optimize ------------------------------------------------------------------------------


def test_optimize_outputs(biased_csv, tmp_path):
    out = tmp_path / "run"
    cfg = small_anneal_config(tmp_path)
    assert main(["optimize", "--input", str(biased_csv), "--config", str(cfg),
                 "--out", str(out), "--seed", "3"]) == 0
    art = read_json(out / "correction.json")
    assert art["schema_version"] == 1 and len(art["xi"]) == 4
    assert art["functions"][0] == {"kind": "identity"}
    manifest = art["manifest"]
    assert manifest["command"] == "optimize" and manifest["seed"] == 3
    assert manifest["config"]["anneal"]["max_iterations"] == 2000
    assert len(manifest["inputs"]["input"]["sha256"]) == 64
    before = read_json(out / "original_report.json")
    after = read_json(out / "debiased_report.json")
    assert after["gini"] < before["gini"]
    run = read_json(out / "optimization.json")
    assert run["manifest"] == manifest
    assert (out / "test_split.csv").exists() and (out / "optimization_split.csv").exists()


def test_config_precedence(biased_csv, tmp_path):
    cfg = small_anneal_config(tmp_path, objective="cobias", seed=9, split=0.4)
    out = tmp_path / "a"
    assert main(["optimize", "--input", str(biased_csv), "--config", str(cfg),
                 "--out", str(out)]) == 0
    snap = read_json(out / "correction.json")["manifest"]["config"]
    assert snap["objective"] == "cobias" and snap["seed"] == 9 and snap["split"] == 0.4
    assert snap["anneal"]["seed"] == 9
    assert snap["anneal"]["cooling_rate"] == 0.95  # untouched default
    out = tmp_path / "b"
    assert main(["optimize", "--input", str(biased_csv), "--config", str(cfg), "--out", str(out),
                 "--objective", "gini", "--seed", "1", "--no-stratified"]) == 0
    snap = read_json(out / "correction.json")["manifest"]["config"]
    assert snap["objective"] == "gini" and snap["seed"] == 1 and snap["stratified"] is False
    assert snap["split"] == 0.4


def test_optimize_cobias_objective(biased_csv, tmp_path, capsys):
    cfg = small_anneal_config(tmp_path)
    out = tmp_path / "c"
    assert main(["optimize", "--input", str(biased_csv), "--config", str(cfg), "--out", str(out),
                 "--objective", "cobias"]) == 0
    assert "Debiased (COBias)" in capsys.readouterr().out
    assert read_json(out / "correction.json")["objective"] == "cobias"


def test_optimize_identity_only_map_warns(biased_csv, tmp_path, caplog):
    cfg = write_json(tmp_path / "id.json", {"map": {"functions": [{"kind": "identity"}]}})
    out = tmp_path / "d"
    with caplog.at_level(logging.WARNING, logger="ginidebias"):
        assert main(["optimize", "--input", str(biased_csv), "--config", str(cfg),
                     "--out", str(out)]) == 0
    assert any("only the identity" in r.getMessage() for r in caplog.records)
    assert read_json(out / "original_report.json") == read_json(out / "debiased_report.json")


def test_optimize_separate_test_file(tmp_path):
    train = save_predictions(synthesize(SynthSpec(3, 60, 1.5, {0}, seed=1)), tmp_path / "tr.jsonl")
    test = save_predictions(synthesize(SynthSpec(3, 60, 1.5, {0}, seed=2)), tmp_path / "te.jsonl")
    out = tmp_path / "e"
    assert main(["optimize", "--input", str(train), "--test", str(test), "--out", str(out),
                 "--search", "exhaustive"]) == 0
    assert not (out / "test_split.jsonl").exists()
    assert "test" in read_json(out / "correction.json")["manifest"]["inputs"]


@pytest.mark.parametrize(
    "doc",
    [{"objective": "f1"}, {"anneal": {"cooling_rate": 1.5}}, {"bogus": 1}, {"split": 1.0},
     {"map": {"functions": [{"kind": "scale", "weight": 2}]}}, {"search": "grid"}],
)
def test_optimize_config_errors(biased_csv, tmp_path, doc):
    cfg = write_json(tmp_path / "bad.json", doc)
    assert main(["optimize", "--input", str(biased_csv), "--config", str(cfg),
                 "--out", str(tmp_path / "x")]) == 2


def test_optimize_unsupported_class_is_infeasible(tmp_path):
    probs = np.array([[0.7, 0.2, 0.1]] * 4 + [[0.2, 0.7, 0.1]] * 4)
    src = save_predictions(LabeledPredictionSet(probs, np.array([0] * 4 + [1] * 4)),
                           tmp_path / "p.csv")
    assert main(["optimize", "--input", str(src), "--out", str(tmp_path / "x")]) == 4


def test_optimize_search_budget_is_infeasible(tmp_path):
    data = synthesize(SynthSpec(8, 10, seed=0))
    src = save_predictions(data, tmp_path / "p.csv")
    assert main(["optimize", "--input", str(src), "--search", "exhaustive",
                 "--out", str(tmp_path / "x")]) == 4


# apply -----------------------------------------------------------------------------------


def three_row_file(tmp_path):
    probs = np.array([[0.9, 0.1], [0.6, 0.4], [0.3, 0.7]])
    data = LabeledPredictionSet(probs, np.array([0, 0, 1]), ids=("a", "b", "c"))
    return save_predictions(data, tmp_path / "three.csv")


def test_apply_hand_artifact(tmp_path):
    # 0.2*0.9=0.18 > 0.1 keeps row a; 0.2*0.6=0.12 < 0.4 flips row b; row c already class 1
    art = write_json(tmp_path / "art.json", {
        "functions": [{"kind": "identity"}, {"kind": "scale", "weight": 0.2}], "xi": [2, 1]})
    out = tmp_path / "o"
    assert main(["apply", "--input", str(three_row_file(tmp_path)), "--artifact", str(art),
                 "--out", str(out)]) == 0
    preds = read_json(out / "corrected_predictions.json")["predictions"]
    assert [p["id"] for p in preds] == ["a", "b", "c"]
    assert [p["original"] for p in preds] == [0, 0, 1]
    assert [p["corrected"] for p in preds] == [0, 1, 1]
    report = read_json(out / "apply_report.json")
    assert report["per_class"]["accuracies"] == [0.5, 1.0]


def test_apply_identity_artifact(biased_csv, tmp_path):
    art = write_json(tmp_path / "id.json", {"functions": [{"kind": "identity"}], "xi": [1] * 4})
    out = tmp_path / "o"
    assert main(["apply", "--input", str(biased_csv), "--artifact", str(art),
                 "--out", str(out)]) == 0
    preds = read_json(out / "corrected_predictions.json")["predictions"]
    assert all(p["original"] == p["corrected"] for p in preds)


def test_apply_matches_optimize_test_report(biased_csv, tmp_path):
    run = tmp_path / "run"
    cfg = small_anneal_config(tmp_path)
    assert main(["optimize", "--input", str(biased_csv), "--config", str(cfg),
                 "--out", str(run)]) == 0
    out = tmp_path / "applied"
    assert main(["apply", "--input", str(run / "test_split.csv"),
                 "--artifact", str(run / "correction.json"), "--out", str(out)]) == 0
    assert read_json(out / "apply_report.json") == read_json(run / "debiased_report.json")


def test_apply_dimension_mismatch(biased_csv, tmp_path):
    art = write_json(tmp_path / "art.json", {"functions": [{"kind": "identity"}], "xi": [1, 1]})
    assert main(["apply", "--input", str(biased_csv), "--artifact", str(art),
                 "--out", str(tmp_path)]) == 3


def test_apply_bad_artifact(biased_csv, tmp_path):
    art = tmp_path / "art.json"
    art.write_text("{not json")
    assert main(["apply", "--input", str(biased_csv), "--artifact", str(art),
                 "--out", str(tmp_path)]) == 3
    write_json(art, {"functions": [{"kind": "identity"}], "xi": [1, 1, 1, 7]})
    assert main(["apply", "--input", str(biased_csv), "--artifact", str(art),
                 "--out", str(tmp_path)]) == 2


# synth -----------------------------------------------------------------------------------


def test_synth_strong_head(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["synth", "--classes", "4", "--counts", "200", "--head-bias", "3",
                 "--head-classes", "0", "--seed", "0", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["metrics", "--input", str(out / "synthetic.csv")]) == 0
    assert read_json(out / "synthetic.metrics.json")["gini"] > 0.4


def test_synth_byte_identical(tmp_path):
    args = ["synth", "--classes", "3", "--counts", "30,40,50", "--seed", "7", "--format", "jsonl"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "synthetic.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "synthetic.jsonl").read_bytes()
    assert len(a.splitlines()) == 120


def test_synth_bad_counts(tmp_path):
    assert main(["synth", "--classes", "3", "--counts", "1,x", "--out", str(tmp_path)]) == 2


# report -----------------------------------------------------------------------------------


def metrics_doc(tmp_path, name, accuracies):
    src = write_json(tmp_path / f"{name}.json", {"accuracies": accuracies})
    assert main(["metrics", "--input", str(src), "--out", str(tmp_path / "m")]) == 0
    return tmp_path / "m" / f"{name}.metrics.json"


def test_report_identical(tmp_path, capsys):
    a = metrics_doc(tmp_path, "a", [0.85, 0.98, 0.97, 0.19])
    capsys.readouterr()
    assert main(["report", "--before", str(a), "--after", str(a), "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert text.count("0%") == 4 and "↓" not in text.split("\n\n")[1].replace("(↓)", "")
    doc = read_json(tmp_path / "comparison.json")
    assert doc["schema_version"] == 1
    assert all(r["rendered"] == "0%" for r in doc["rows"])


def test_report_ddi_mean(tmp_path, capsys):
    a = write_json(tmp_path / "a.json", _report(0.23))
    b = write_json(tmp_path / "b.json", _report(0.37))
    assert main(["report", "--before", str(a), "--after", str(b)]) == 0
    assert "↑ 61%" in capsys.readouterr().out


def _report(mean):
    return {"schema_version": 1, "mean_accuracy": mean, "gini": 0.5, "cobias": 0.3,
            "top_class_dominance": 2.0, "max_gini_bound": 0.8,
            "per_class": {"accuracies": [0.1, 0.2, 0.3, 0.4, 0.5]}}


def test_report_class_count_mismatch(tmp_path):
    a = metrics_doc(tmp_path, "a", [0.5, 0.6])
    b = metrics_doc(tmp_path, "b", [0.5, 0.6, 0.7])
    assert main(["report", "--before", str(a), "--after", str(b)]) == 3

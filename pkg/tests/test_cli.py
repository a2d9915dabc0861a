import json
import logging

import pandas as pd
import pytest

from forge import __version__
from forge.cli import build_parser, main
from forge.dataio import read_fingerprints, read_mmps, read_plans, read_pool_spec
from forge.smiles import canonicalize


@pytest.fixture(autouse=True)
def reset_forge_logger():
    yield
    logger = logging.getLogger("forge")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_parse_single_smiles(capsys):
    assert main(["parse", "--smiles", "OCC"]) == 0
    assert capsys.readouterr().out.strip() == canonicalize("CCO")


def test_parse_error_exit_code(capsys):
    assert main(["parse", "--smiles", "C1CC"]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: ParseError:")
    assert "kind=UnclosedRing" in err
    assert "position=1" in err


def test_parse_dataset_reports_bad_rows(tmp_path):
    source = tmp_path / "in.csv"
    source.write_text("smiles,label\nOCC,1\nC(C,2\n")
    out = tmp_path / "parsed.csv"
    assert main(["parse", "--dataset", str(source), "--out", str(out)]) == 0
    frame = pd.read_csv(out, keep_default_na=False)
    assert frame["canonical"].tolist() == [canonicalize("CCO"), ""]
    assert frame["error"].tolist() == ["", "UnbalancedParenthesis@1"]


def test_toy_command(tmp_path):
    out = tmp_path / "toy.csv"
    assert main(["toy", "--n", "10", "--noise", "0", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 10
    assert list(frame.columns) == ["id", "smiles", "label"]
    assert main(["toy", "--n", "0"]) == 2


def test_fingerprint_and_pooling(tmp_path, toy_path):
    fps = tmp_path / "fps.jsonl"
    spec = tmp_path / "spec.json"
    pooled = tmp_path / "pooled.jsonl"
    assert main(["fingerprint", "--dataset", str(toy_path), "--id-column", "id", "--radius", "1", "--out", str(fps)]) == 0
    ids, sets = read_fingerprints(fps)
    assert len(ids) == 60 and ids[0] == "toy-000"

    assert main(["pool", "fit", "--fingerprints", str(fps), "--method", "sortslice", "--dim", "32", "--out", str(spec)]) == 0
    assert read_pool_spec(spec).method.value == "sort_slice"

    assert main(["pool", "transform", "--spec", str(spec), "--fingerprints", str(fps), "--out", str(pooled)]) == 0
    rows = [json.loads(line) for line in pooled.read_text().splitlines()]
    assert len(rows) == 60
    assert all(len(row["x"]) == 32 for row in rows)


def test_supervised_pooling_needs_labels(tmp_path, toy_path):
    fps = tmp_path / "fps.jsonl"
    assert main(["fingerprint", "--dataset", str(toy_path), "--out", str(fps)]) == 0
    assert main(["pool", "fit", "--fingerprints", str(fps), "--method", "mim", "--dim", "16"]) == 2
    assert main(
        ["pool", "fit", "--fingerprints", str(fps), "--method", "mim", "--dim", "16", "--dataset", str(toy_path)]
    ) == 0


def test_fingerprint_reports_bad_row(tmp_path, capsys):
    source = tmp_path / "bad.csv"
    source.write_text("smiles\nCCO\nCX\n")
    assert main(["fingerprint", "--dataset", str(source)]) == 2
    err = capsys.readouterr().err
    assert "row=1" in err and "kind=UnknownSymbol" in err


def test_mmp_and_split(tmp_path, toy_path):
    mmps = tmp_path / "mmps.csv"
    cleaned = tmp_path / "clean.csv"
    plans = tmp_path / "plans.json"
    assert main(["mmp", "--dataset", str(toy_path), "--id-column", "id", "--out", str(mmps), "--cleaned-out", str(cleaned)]) == 0
    pairs = read_mmps(mmps)
    assert pairs
    assert len(pd.read_csv(cleaned)) == 60

    assert main(["split", "--dataset", str(cleaned), "--mmps", str(mmps), "--k", "3", "--seeds", "0,1", "--out", str(plans)]) == 0
    written = read_plans(plans)
    assert [(p.seed, p.fold) for p in written] == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    for plan in written:
        plan.verify(60, pairs)


def test_train_then_evaluate(tmp_path, toy_path):
    model = tmp_path / "model.json"
    metrics = tmp_path / "metrics.json"
    flags = ["--dataset", str(toy_path), "--method", "sort_slice", "--dim", "32", "--seeds", "0"]
    assert main(["train", *flags, "--model-out", str(model)]) == 0
    assert json.loads(model.read_text())["kind"] == "knn"

    assert main(["evaluate", *flags, "--model-file", str(model), "--metrics-out", str(metrics)]) == 0
    result = json.loads(metrics.read_text())
    assert (result["seed"], result["fold"]) == (0, 0)
    assert result["mae"] >= 0
    assert set(result["mmp"]) == {"inter", "test", "cores"}

    assert main(["evaluate", *flags, "--plan", "1", "--model-file", str(model)]) == 2


def test_experiment_command(tmp_path, toy_path):
    out = tmp_path / "results.json"
    assert main(["experiment", "--dataset", str(toy_path), "--dim", "32", "--seeds", "0", "--out", str(out)]) == 0
    results = json.loads(out.read_text())
    assert len(results["plans"]) == 2
    assert results["summary"]["mae"]["count"] == 2


def test_experiment_from_config_file(tmp_path, toy_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"dataset": str(toy_path), "pooling": {"method": "hash", "dim": 16}, "split": {"seeds": [3]}}))
    out = tmp_path / "results.json"
    assert main(["experiment", "--config", str(config), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["config"]["pooling"] == {"method": "hash", "dim": 16}


def test_config_or_dataset_required(capsys):
    assert main(["experiment"]) == 2
    assert "give --config or --dataset" in capsys.readouterr().err


def test_unexpected_errors_exit_one(monkeypatch, capsys):
    def explode(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr("forge.cli.make_sar_dataset", explode)
    assert main(["toy"]) == 1
    assert "rerun with --debug" in capsys.readouterr().err
    assert main(["toy", "--debug"]) == 1
    assert "Traceback" in capsys.readouterr().err

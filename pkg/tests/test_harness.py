import math

import numpy as np
import pytest

from forge.config import ExperimentConfig
from forge.dataio import DatasetRecords
from forge.exceptions import DatasetError, ParseError
from forge.harness import (
    FittedPlan,
    fit_plan,
    make_plans,
    pair_metrics,
    prepare_data,
    run_experiment,
    score_plan,
    summarize,
)
from forge.mmp import AcLabel, PdLabel
from forge.toydata import MAX_MOLECULES, make_sar_dataset

AC, HALF, NON = AcLabel.AC, AcLabel.HALF_AC, AcLabel.NON_AC
LEFT, RIGHT = PdLabel.LEFT, PdLabel.RIGHT


@pytest.fixture(scope="module")
def toy_data(toy_path):
    cfg = ExperimentConfig.from_dict({"dataset": str(toy_path), "pooling": {"dim": 64}})
    return prepare_data(cfg)


def test_prepare_data(toy_data):
    assert toy_data.n == 60
    assert toy_data.activities.shape == (60,)
    assert len(toy_data.fingerprints) == 60
    stats = toy_data.stats()
    assert stats["records"] == 60 and stats["dropped"] == 0
    assert stats["mmps"] == len(toy_data.mmps) > 0
    assert sum(stats["ac_counts"].values()) == stats["mmps"]


def test_make_plans(small_config, toy_data):
    plans = make_plans(small_config, toy_data)
    assert len(plans) == 6
    for plan in plans:
        plan.verify(toy_data.n, toy_data.mmps)


def test_cleaning_and_strict_mode(small_config):
    dataset = DatasetRecords(ids=["a", "b", "c"], smiles=["CCO", "C1CC", "OCC"], labels=[5.0, 6.0, 5.4])
    data = prepare_data(small_config, dataset)
    assert data.n == 1
    assert data.dropped == 1
    assert data.ids == ["a"]
    assert data.activities.tolist() == pytest.approx([5.2])

    strict = small_config.with_overrides(clean=False)
    with pytest.raises(ParseError):
        prepare_data(strict, dataset)
    kept = prepare_data(strict, DatasetRecords(["a", "b"], ["CCO", "OCC"], [5.0, 5.4]))
    assert kept.n == 2


def test_nothing_left_after_cleaning(small_config):
    with pytest.raises(DatasetError):
        prepare_data(small_config, DatasetRecords(["a"], ["C("], [1.0]))


def test_raw_activities_become_p_units(small_config):
    cfg = small_config.with_overrides(activity_units="raw", molar_scale=1e-9)
    data = prepare_data(cfg, DatasetRecords(["a", "b"], ["CCO", "CCN"], [10.0, 1000.0]))
    assert data.activities.tolist() == pytest.approx([8.0, 6.0])


def test_classification_needs_binary_labels(small_config):
    cfg = small_config.with_overrides(task="classification")
    with pytest.raises(DatasetError):
        prepare_data(cfg, DatasetRecords(["a", "b"], ["CCO", "CCN"], [0.0, 2.0]))


def test_pair_metrics_by_hand():
    metrics = pair_metrics(
        [AC, HALF, NON, AC],
        [LEFT, RIGHT, RIGHT, RIGHT],
        [AC, AC, NON, NON],
        [AC, HALF, NON, NON],
        [LEFT, LEFT, RIGHT, LEFT],
    )
    assert metrics["n"] == 4
    binary = metrics["ac_binary"]
    assert binary["n"] == 3
    assert binary["mcc"] == pytest.approx(0.5)
    assert binary["sensitivity"] == pytest.approx(0.5)
    assert binary["precision"] == pytest.approx(1.0)
    ternary = metrics["ac_ternary"]
    assert ternary["sensitivity"] == {"AC": 0.5, "HalfAC": 1.0, "NonAC": 1.0}
    assert ternary["precision"]["NonAC"] == pytest.approx(0.5)
    pd = metrics["pd"]
    assert pd["accuracy"] == pytest.approx(0.5)
    assert pd["accuracy_predicted_ac"] == pytest.approx(1.0)
    assert pd["accuracy_predicted_half_or_ac"] == pytest.approx(0.5)


def test_pair_metrics_on_empty_set():
    metrics = pair_metrics([], [], [], [], [])
    assert metrics["n"] == 0
    assert metrics["ac_binary"]["mcc"] is None
    assert metrics["ac_ternary"]["mcc"] is None
    assert metrics["pd"]["accuracy"] is None


def test_summarize():
    summary = summarize(
        [
            {"seed": 0, "fold": 0, "mae": 1.0, "auroc": None, "mmp": {"test": {"n": 2}}},
            {"seed": 0, "fold": 1, "mae": 3.0, "auroc": None, "mmp": {"test": {"n": None}}},
        ]
    )
    assert "seed" not in summary and "fold" not in summary
    assert summary["mae"]["mean"] == pytest.approx(2.0)
    assert summary["mae"]["sd"] == pytest.approx(math.sqrt(2.0))
    assert summary["mae"]["count"] == 2
    assert summary["auroc"] == {"mean": None, "sd": None, "count": 0}
    assert summary["mmp.test.n"] == {"mean": 2.0, "sd": 0.0, "count": 1}


def test_knn_plan_round_trip(small_config, toy_data):
    plan = make_plans(small_config, toy_data)[0]
    fitted = fit_plan(toy_data, plan, small_config)
    restored = FittedPlan.from_dict(fitted.to_dict())
    assert score_plan(toy_data, plan, small_config, restored) == score_plan(toy_data, plan, small_config, fitted)


def test_run_experiment_is_reproducible(small_config, toy_data):
    first = run_experiment(small_config, data=toy_data, created_at="2024-01-01T00:00:00+00:00")
    second = run_experiment(small_config, data=toy_data, created_at="2024-01-01T00:00:00+00:00")
    assert first == second
    assert len(first["plans"]) == 6
    for result in first["plans"]:
        sizes = result["sizes"]
        assert sizes["d_train"] + sizes["d_test"] == 60
        assert sizes["train"] + sizes["inter"] + sizes["test"] == len(toy_data.mmps)
        assert sizes["cores"] <= sizes["test"]
        assert result["mae"] >= 0
        assert result["auroc"] is None
    assert first["summary"]["mae"]["count"] == 6
    assert first["dataset"]["compounds"] == 60


@pytest.mark.parametrize("method", ["hash", "filter", "mim"])
def test_every_pooling_method_runs(small_config, toy_data, method):
    cfg = small_config.with_overrides(**{"pooling.method": method, "split.seeds": [0]})
    results = run_experiment(cfg, data=toy_data)
    assert results["summary"]["mae"]["count"] == 2


def test_classification_experiment(small_config, toy_dataset):
    median = float(np.median(toy_dataset.labels))
    labels = [1.0 if label > median else 0.0 for label in toy_dataset.labels]
    dataset = DatasetRecords(toy_dataset.ids, toy_dataset.smiles, labels)
    cfg = small_config.with_overrides(task="classification", **{"split.seeds": [0]})
    data = prepare_data(cfg, dataset)
    assert data.mmps == []
    results = run_experiment(cfg, data=data)
    for result in results["plans"]:
        assert 0.0 <= result["auroc"] <= 1.0
        assert 0.0 < result["auprc"] <= 1.0
        assert result["mae"] is None and result["mmp"] is None


@pytest.mark.slow
def test_mlp_experiment(small_config, toy_data):
    cfg = small_config.with_overrides(
        model="mlp", **{"split.seeds": [0], "mlp.hidden": [16], "mlp.train.epochs": 5}
    )
    results = run_experiment(cfg, data=toy_data)
    assert all(result["mae"] is not None for result in results["plans"])


@pytest.mark.slow
@pytest.mark.parametrize("features", ["ecfp", "nfp"])
def test_twin_experiment(small_config, toy_data, features):
    cfg = small_config.with_overrides(
        model="twin",
        **{
            "split.seeds": [0],
            "twin.features": features,
            "twin.embedding": [16],
            "twin.ac_hidden": [8],
            "twin.pd_hidden": [8],
            "twin.train.epochs": 3,
            "twin.nfp.hidden": [16, 8],
            "twin.nfp.train.epochs": 3,
        },
    )
    results = run_experiment(cfg, data=toy_data)
    for result in results["plans"]:
        assert result["mae"] is None
        test = result["mmp"]["test"]
        assert test["n"] == result["sizes"]["test"]
        if test["n"]:
            assert -1.0 <= test["ac_ternary"]["mcc"] <= 1.0


@pytest.mark.slow
def test_worker_processes_do_not_change_results(small_config, toy_data, monkeypatch):
    stamp = "2024-01-01T00:00:00+00:00"
    monkeypatch.setenv("FORGE_THREADS", "1")
    serial = run_experiment(small_config, data=toy_data, created_at=stamp)
    monkeypatch.setenv("FORGE_THREADS", "2")
    parallel = run_experiment(small_config, data=toy_data, created_at=stamp)
    assert serial == parallel


@pytest.fixture(scope="module")
def noisy_setup(tmp_path_factory):
    path = tmp_path_factory.mktemp("noisy") / "sar.csv"
    make_sar_dataset(MAX_MOLECULES, seed=0, noise=0.1).to_csv(path, index=False)
    cfg = ExperimentConfig.from_dict(
        {
            "dataset": str(path),
            "id_column": "id",
            "pooling": {"method": "sort_slice", "dim": 64},
            "split": {"k": 2, "seeds": [0, 1, 2]},
            "knn": {"k": 3},
            "output": str(path.with_suffix(".json")),
        }
    )
    return cfg, prepare_data(cfg)


@pytest.mark.slow
def test_sort_and_slice_beats_hashing_with_knn(noisy_setup):
    cfg, data = noisy_setup
    sliced = run_experiment(cfg, data=data)
    hashed = run_experiment(cfg.with_overrides(**{"pooling.method": "hash"}), data=data)
    pairs = list(zip(sliced["plans"], hashed["plans"]))
    assert len(pairs) == 6
    wins = sum(a["mae"] <= b["mae"] for a, b in pairs)
    assert wins >= 5
    assert sliced["summary"]["mae"]["mean"] <= hashed["summary"]["mae"]["mean"]


@pytest.mark.slow
@pytest.mark.parametrize("method", ["sort_slice", "hash"])
def test_known_partner_activity_raises_cliff_sensitivity(noisy_setup, method):
    cfg, data = noisy_setup
    summary = run_experiment(cfg.with_overrides(**{"pooling.method": method}), data=data)["summary"]
    inter = summary["mmp.inter.ac_binary.sensitivity"]
    test = summary["mmp.test.ac_binary.sensitivity"]
    assert inter["count"] > 0 and test["count"] > 0
    assert inter["mean"] >= test["mean"]

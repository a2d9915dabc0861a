"""
Experiment orchestration: clean, fingerprint, find MMPs, split, then fit
and score one model per split plan.

Per-plan results are plain dicts; metrics that are undefined for a plan are
stored as ``None`` and skipped when means and standard deviations are taken.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from forge import __version__
from forge.config import ExperimentConfig, env_threads
from forge.dataio import DatasetRecords, load_dataset, write_json
from forge.ecfp import FingerprintSet, enumerate_many
from forge.exceptions import DatasetError, NoPositivesError, SingleClassError
from forge.logs import stage
from forge.metrics import (
    BinaryCounts,
    ConfusionCounts,
    accuracy,
    auprc,
    auroc,
    mae,
    mcc_binary,
    mcc_multiclass,
    precision,
    sensitivity,
)
from forge.mmp import (
    AcLabel,
    CleanedRecord,
    CleaningReport,
    Mmp,
    PdLabel,
    clean_dataset,
    find_mmps,
    label_counts,
    to_pactivity,
)
from forge.molgraph import MolGraph, canonical_smiles
from forge.neural import DenseNet
from forge.pooling import FitContext, PoolSpec, fit_pooling
from forge.predictors import (
    KnnRegressor,
    MlpRegressor,
    inter_mode_inputs,
    qsar_ac_binary,
    qsar_ac_ternary,
    qsar_pd,
)
from forge.smiles import parse_smiles
from forge.split import MmpSet, SplitPlan, repeated_cv, set_sizes
from forge.stats import binarize_labels, is_binary
from forge.twin import TwinModel, class_weights, train_twin, twin_forward

logger = logging.getLogger("forge.harness")

EVALUATED_SETS = (MmpSet.INTER, MmpSet.TEST, MmpSet.CORES)


@dataclass
class PreparedData:
    """A cleaned dataset with fingerprints and MMPs; activities are p-units or 0/1 labels."""

    ids: List[str]
    smiles: List[str]
    activities: np.ndarray
    graphs: List[MolGraph] = field(repr=False)
    fingerprints: List[FingerprintSet] = field(repr=False)
    mmps: List[Mmp] = field(default_factory=list)
    records: int = 0
    dropped: int = 0

    @property
    def n(self) -> int:
        return len(self.smiles)

    def stats(self) -> Dict[str, Any]:
        counts = label_counts(self.mmps)
        return {
            "records": self.records,
            "compounds": self.n,
            "dropped": self.dropped,
            "mmps": len(self.mmps),
            "ac_counts": {label.tag: counts[label] for label in AcLabel},
        }


def _parse_all(dataset: DatasetRecords, units: str) -> CleaningReport:
    report = clean_dataset(dataset.records, units=units, ids=dataset.ids)  # type: ignore[arg-type]
    if not report.records:
        raise DatasetError("no usable records after cleaning", {"records": len(dataset)})
    return report


def prepare_data(cfg: ExperimentConfig, dataset: Optional[DatasetRecords] = None) -> PreparedData:
    """Load (unless given), clean, fingerprint and pair the dataset named by ``cfg``."""
    if dataset is None:
        dataset = load_dataset(cfg.dataset, cfg.smiles_column, cfg.label_column, cfg.id_column)
    classification = cfg.task == "classification"
    if classification and not is_binary(dataset.labels):
        raise DatasetError("classification needs 0/1 labels", {"column": cfg.label_column})
    units = "binary" if classification else cfg.activity_units

    with stage(logger, "clean", len(dataset), "records"):
        if cfg.clean:
            report = _parse_all(dataset, units)
        else:
            report = _strict_report(dataset)
    activities = np.asarray(report.activities, dtype=np.float64)
    if units == "raw":
        activities = to_pactivity(activities, cfg.molar_scale)

    graphs = report.graphs
    with stage(logger, "fingerprint", len(graphs), "molecules"):
        fingerprints = enumerate_many(graphs, cfg.ecfp, workers=env_threads())

    mmps: List[Mmp] = []
    if not classification:
        with stage(logger, "mmp", len(graphs), "molecules"):
            mmps = find_mmps(graphs, activities.tolist())

    return PreparedData(
        ids=[r.record_id or str(r.rows[0]) for r in report.records],
        smiles=[r.smiles for r in report.records],
        activities=activities,
        graphs=graphs,
        fingerprints=fingerprints,
        mmps=mmps,
        records=len(dataset),
        dropped=len(report.dropped),
    )


def _strict_report(dataset: DatasetRecords) -> CleaningReport:
    "Without cleaning every record must parse; duplicates are kept as they are."
    records = []
    for row, (smiles, label) in enumerate(dataset.records):
        graph = parse_smiles(smiles)
        records.append(CleanedRecord(smiles, canonical_smiles(graph), float(label), [row], graph, dataset.ids[row]))
    return CleaningReport(records, [])


def make_plans(cfg: ExperimentConfig, data: PreparedData) -> List[SplitPlan]:
    stratify = None
    if cfg.split.stratify or cfg.task == "classification":
        labels = data.activities
        stratify = labels.astype(np.int64) if is_binary(labels) else binarize_labels(labels)
    return repeated_cv(data.n, data.mmps, cfg.split.k, cfg.split.seeds, stratify=stratify)


@dataclass
class FittedPlan:
    """Everything fitted on one plan's training compounds."""

    seed: int
    fold: int
    kind: str
    pool: PoolSpec
    knn: Optional[KnnRegressor] = None
    mlp: Optional[MlpRegressor] = None
    twin: Optional[TwinModel] = None
    nfp: Optional[DenseNet] = None

    def features(self, pooled: np.ndarray) -> np.ndarray:
        return self.nfp.forward(pooled) if self.nfp is not None else pooled.astype(np.float64)

    def predict_activity(self, pooled: np.ndarray) -> np.ndarray:
        if self.knn is not None:
            return self.knn.predict(pooled)
        if self.mlp is not None:
            return self.mlp.predict(pooled)
        raise ValueError(f"a {self.kind} model does not predict activities")

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "kind": self.kind,
            "seed": self.seed,
            "fold": self.fold,
            "pool": self.pool.model_dump(mode="json"),
        }
        if self.knn is not None and self.knn.model is not None:
            model = self.knn.model
            data["knn"] = {
                "k": model.k,
                "minkowski_p": model.minkowski_p,
                "weighting": model.weighting.value,
                "features": model.features.astype(np.int64).tolist(),
                "labels": model.labels.tolist(),
            }
        if self.mlp is not None:
            data["mlp"] = self.mlp.to_dict()
        if self.twin is not None:
            data["twin"] = self.twin.to_dict()
        if self.nfp is not None:
            data["nfp"] = self.nfp.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FittedPlan":
        fitted = cls(
            seed=int(data["seed"]),
            fold=int(data["fold"]),
            kind=data["kind"],
            pool=PoolSpec.model_validate(data["pool"]),
        )
        if "knn" in data:
            entry = data["knn"]
            fitted.knn = KnnRegressor(entry["k"], entry["minkowski_p"], entry["weighting"]).fit(
                np.asarray(entry["features"], dtype=np.float64), entry["labels"]
            )
        if "mlp" in data:
            fitted.mlp = MlpRegressor(net=DenseNet.from_dict(data["mlp"]["net"]))
        if "twin" in data:
            fitted.twin = TwinModel.from_dict(data["twin"])
        if "nfp" in data:
            fitted.nfp = DenseNet.from_dict(data["nfp"])
        return fitted


def pooled_features(data: PreparedData, plan: SplitPlan, cfg: ExperimentConfig) -> Tuple[PoolSpec, np.ndarray]:
    """Fit the pooling operator on the plan's training compounds and pool every compound."""
    train_fps = [data.fingerprints[i] for i in plan.d_train]
    ctx = FitContext(train_fps, labels=data.activities[plan.d_train].tolist())
    spec = fit_pooling(cfg.pooling.method, ctx, cfg.pooling.dim)
    return spec, spec.transform_many(data.fingerprints)


def fit_plan(data: PreparedData, plan: SplitPlan, cfg: ExperimentConfig) -> FittedPlan:
    spec, pooled = pooled_features(data, plan, cfg)
    train = np.asarray(plan.d_train, dtype=np.int64)
    y = data.activities[train]
    fitted = FittedPlan(plan.seed, plan.fold, cfg.model, spec)

    if cfg.model == "knn":
        fitted.knn = KnnRegressor(cfg.knn.k, cfg.knn.minkowski_p, cfg.knn.weighting).fit(pooled[train], y)
        return fitted
    if cfg.model == "mlp":
        fitted.mlp = MlpRegressor(hidden=cfg.mlp.hidden, train=cfg.mlp.train).fit(pooled[train], y)
        return fitted

    settings = cfg.twin
    if settings.features == "nfp":
        qsar = MlpRegressor(hidden=settings.nfp.hidden, train=settings.nfp.train).fit(pooled[train], y)
        fitted.nfp = qsar.feature_extractor()
    features = fitted.features(pooled)
    pairs = [data.mmps[index] for index in plan.m_train]
    counts = label_counts(pairs)
    weights = class_weights(*(max(counts[label], 1) for label in AcLabel))
    rng = np.random.default_rng([settings.train.seed, plan.seed, plan.fold])
    model = TwinModel.build(features.shape[1], settings.embedding, settings.ac_hidden, settings.pd_hidden, rng)
    result = train_twin(
        model,
        features[[p.i for p in pairs]],
        features[[p.j for p in pairs]],
        [int(p.ac_label) for p in pairs],
        [int(p.pd_label) for p in pairs],
        weights,
        settings.train,
    )
    fitted.twin = result.model
    return fitted


def pair_metrics(
    truth_ac: Sequence[AcLabel],
    truth_pd: Sequence[PdLabel],
    pred_binary: Sequence[AcLabel],
    pred_ternary: Sequence[AcLabel],
    pred_pd: Sequence[PdLabel],
) -> Dict[str, Any]:
    """
    AC and PD metrics for one MMP set.

    Binary AC metrics leave out true HalfACs and treat AC as the positive
    class. PD accuracy is also reported on pairs predicted to be ACs and on
    pairs predicted to be HalfACs or ACs.
    """
    n = len(truth_ac)
    truth_ac = np.asarray(truth_ac, dtype=np.int64)
    truth_pd = np.asarray(truth_pd, dtype=np.int64)
    pred_binary = np.asarray(pred_binary, dtype=np.int64)
    pred_ternary = np.asarray(pred_ternary, dtype=np.int64)
    pred_pd = np.asarray(pred_pd, dtype=np.int64)

    decided = truth_ac != AcLabel.HALF_AC
    binary = BinaryCounts.from_labels(truth_ac[decided] == AcLabel.AC, pred_binary[decided] == AcLabel.AC)
    binary_confusion = binary.to_confusion()
    ternary = ConfusionCounts.from_labels(truth_ac, pred_ternary, 3)

    cliff = pred_ternary == AcLabel.AC
    steep = pred_ternary != AcLabel.NON_AC
    return {
        "n": n,
        "ac_binary": {
            "n": binary.total,
            "mcc": mcc_binary(binary) if binary.total else None,
            "sensitivity": sensitivity(binary_confusion, 0),
            "precision": precision(binary_confusion, 0),
        },
        "ac_ternary": {
            "mcc": mcc_multiclass(ternary) if n else None,
            "sensitivity": {label.tag: sensitivity(ternary, label) for label in AcLabel},
            "precision": {label.tag: precision(ternary, label) for label in AcLabel},
        },
        "pd": {
            "accuracy": accuracy(pred_pd, truth_pd),
            "accuracy_predicted_ac": accuracy(pred_pd[cliff], truth_pd[cliff]),
            "accuracy_predicted_half_or_ac": accuracy(pred_pd[steep], truth_pd[steep]),
        },
    }


def _qsar_pair_predictions(
    data: PreparedData, plan: SplitPlan, pairs: Sequence[Mmp], predicted: np.ndarray, cfg: ExperimentConfig
) -> Tuple[List[AcLabel], List[AcLabel], List[PdLabel]]:
    in_train = plan.train_mask(data.n)
    binary, ternary, direction = [], [], []
    for pair in pairs:
        q_i, q_j = inter_mode_inputs(pair, predicted, data.activities, in_train)
        binary.append(qsar_ac_binary(q_i, q_j, cfg.thresholds))
        ternary.append(qsar_ac_ternary(q_i, q_j, cfg.thresholds))
        direction.append(qsar_pd(q_i, q_j))
    return binary, ternary, direction


def _twin_pair_predictions(
    fitted: FittedPlan, features: np.ndarray, pairs: Sequence[Mmp]
) -> Tuple[List[AcLabel], List[AcLabel], List[PdLabel]]:
    if not pairs:
        return [], [], []
    assert fitted.twin is not None
    ac, pd = twin_forward(fitted.twin, features[[p.i for p in pairs]], features[[p.j for p in pairs]])
    ternary = [AcLabel(int(k)) for k in np.argmax(ac, axis=1)]
    # binary AC call: argmax is AC; HalfAC and NonAC both count as negative
    binary = [AcLabel.AC if label == AcLabel.AC else AcLabel.NON_AC for label in ternary]
    direction = [PdLabel.LEFT if p > 0.5 else PdLabel.RIGHT for p in pd]
    return binary, ternary, direction


def score_plan(data: PreparedData, plan: SplitPlan, cfg: ExperimentConfig, fitted: FittedPlan) -> Dict[str, Any]:
    """Metrics of a fitted model on one plan's held-out compounds and MMP sets."""
    pooled = fitted.pool.transform_many(data.fingerprints)
    test = np.asarray(plan.d_test, dtype=np.int64)
    result: Dict[str, Any] = {
        "seed": plan.seed,
        "fold": plan.fold,
        "sizes": {"d_train": len(plan.d_train), "d_test": len(plan.d_test), **set_sizes(plan)},
        "mae": None,
        "auroc": None,
        "auprc": None,
        "mmp": None,
    }

    if cfg.task == "classification":
        scores = fitted.predict_activity(pooled[test])
        labels = data.activities[test].astype(np.int64)
        try:
            result["auroc"] = auroc(scores, labels)
        except SingleClassError:
            logger.warning("seed %d fold %d: one class in the test fold, AUROC undefined", plan.seed, plan.fold)
        try:
            result["auprc"] = auprc(scores, labels)
        except NoPositivesError:
            logger.warning("seed %d fold %d: no positives in the test fold, AUPRC undefined", plan.seed, plan.fold)
        return result

    if fitted.twin is None:
        predicted = np.zeros(data.n)
        predicted[test] = fitted.predict_activity(pooled[test])
        result["mae"] = mae(predicted[test], data.activities[test])
    else:
        features = fitted.features(pooled)

    mmp_metrics = {}
    for which in EVALUATED_SETS:
        pairs = [data.mmps[index] for index in plan.mmp_indices(which)]
        if fitted.twin is None:
            binary, ternary, direction = _qsar_pair_predictions(data, plan, pairs, predicted, cfg)
        else:
            binary, ternary, direction = _twin_pair_predictions(fitted, features, pairs)
        mmp_metrics[which.value] = pair_metrics(
            [p.ac_label for p in pairs], [p.pd_label for p in pairs], binary, ternary, direction
        )
    result["mmp"] = mmp_metrics
    return result


def evaluate_plan(data: PreparedData, plan: SplitPlan, cfg: ExperimentConfig) -> Dict[str, Any]:
    fitted = fit_plan(data, plan, cfg)
    return score_plan(data, plan, cfg, fitted)


def _evaluate_job(args: Tuple[PreparedData, SplitPlan, ExperimentConfig]) -> Dict[str, Any]:
    return evaluate_plan(*args)


def _numeric_leaves(tree: Any, prefix: str = "") -> Iterator[Tuple[str, Optional[float]]]:
    if isinstance(tree, dict):
        for key, value in tree.items():
            yield from _numeric_leaves(value, f"{prefix}.{key}" if prefix else str(key))
    elif tree is None or isinstance(tree, (int, float)):
        yield prefix, tree


def summarize(plans: Sequence[Dict[str, Any]]) -> Dict[str, Dict[str, Any]]:
    """
    Mean and standard deviation of every numeric plan metric, keyed by dotted path.

    Nulls are skipped; ``count`` says how many plans contributed. A metric that
    is null in every plan gets null mean and sd. The sd is the sample standard
    deviation (0 for a single value).
    """
    collected: Dict[str, List[float]] = {}
    for plan in plans:
        for path, value in _numeric_leaves({k: v for k, v in plan.items() if k not in ("seed", "fold")}):
            bucket = collected.setdefault(path, [])
            if value is not None:
                bucket.append(float(value))
    summary = {}
    for path, values in collected.items():
        if not values:
            summary[path] = {"mean": None, "sd": None, "count": 0}
            continue
        sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        summary[path] = {"mean": float(np.mean(values)), "sd": sd, "count": len(values)}
    return summary


def run_experiment(
    cfg: ExperimentConfig,
    data: Optional[PreparedData] = None,
    plans: Optional[List[SplitPlan]] = None,
    created_at: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Run the whole pipeline and return the results document.

    Plans are evaluated in order, across FORGE_THREADS worker processes when
    more than one is allowed; the output does not depend on the worker count.
    """
    if data is None:
        data = prepare_data(cfg)
    if plans is None:
        plans = make_plans(cfg, data)
    for plan in plans:
        plan.verify(data.n, data.mmps)

    workers = min(env_threads(), len(plans))
    with stage(logger, "evaluate", len(plans), "plans"):
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_evaluate_job, [(data, plan, cfg) for plan in plans]))
        else:
            results = [evaluate_plan(data, plan, cfg) for plan in plans]

    return {
        "version": __version__,
        "created_at": created_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.model_dump(mode="json"),
        "dataset": data.stats(),
        "plans": results,
        "summary": summarize(results),
    }


def run_and_write(cfg: ExperimentConfig) -> Dict[str, Any]:
    results = run_experiment(cfg)
    write_json(cfg.output, results)
    logger.info("results written to %s", cfg.output)
    return results

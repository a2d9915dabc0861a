"""
QSAR baselines and the rules that turn activity predictions into pair labels.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from forge.config import AcThresholds, TrainConfig
from forge.exceptions import EmptyTrainingSetError, LengthMismatchError, SplitRoutingError, TrainingDivergedError
from forge.mmp import AcLabel, Mmp, PdLabel
from forge.neural import Activation, Adam, DenseNet, extract_nfp

logger = logging.getLogger("forge.predictors")


class Weighting(str, Enum):
    UNIFORM = "uniform"
    INVERSE_DISTANCE = "distance"


def minkowski_distances(features: np.ndarray, query: np.ndarray, p: float) -> np.ndarray:
    return np.sum(np.abs(features - query) ** p, axis=-1) ** (1.0 / p)


@dataclass
class KnnModel:
    features: np.ndarray
    labels: np.ndarray
    k: int = 5
    minkowski_p: float = 2.0
    weighting: Weighting = Weighting.UNIFORM

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        self.weighting = Weighting(self.weighting)
        if self.features.shape[0] == 0:
            raise EmptyTrainingSetError("kNN needs at least one training point")
        if self.features.shape[0] != self.labels.shape[0]:
            raise LengthMismatchError(
                "features and labels differ in length",
                {"features": self.features.shape[0], "labels": self.labels.shape[0]},
            )
        if not 1 <= self.k <= self.features.shape[0]:
            raise ValueError(f"k={self.k} must lie in 1..{self.features.shape[0]}")
        if self.minkowski_p < 1:
            raise ValueError("the Minkowski power must be at least 1")


def knn_predict(m: KnnModel, x: np.ndarray) -> float:
    """
    Mean label of the ``k`` nearest training points.

    Equal distances are ordered by training index. Under inverse-distance
    weighting, exact matches (distance 0) take the prediction outright.
    """
    distances = minkowski_distances(m.features, np.asarray(x, dtype=np.float64), m.minkowski_p)
    nearest = np.argsort(distances, kind="stable")[: m.k]
    labels = m.labels[nearest]
    if m.weighting == Weighting.UNIFORM:
        return float(np.mean(labels))
    close = distances[nearest]
    exact = close == 0
    if exact.any():
        return float(np.mean(labels[exact]))
    weights = 1.0 / close
    return float(np.sum(weights * labels) / np.sum(weights))


class KnnRegressor:
    """fit/predict wrapper around ``KnnModel``; also yields class-1 probabilities for 0/1 labels."""

    def __init__(self, k: int = 5, minkowski_p: float = 2.0, weighting: str = "uniform") -> None:
        self.k = k
        self.minkowski_p = minkowski_p
        self.weighting = Weighting(weighting)
        self.model: Optional[KnnModel] = None

    def fit(self, features: np.ndarray, labels: Sequence[float]) -> "KnnRegressor":
        k = min(self.k, len(labels))
        self.model = KnnModel(features, np.asarray(labels), k, self.minkowski_p, self.weighting)
        return self

    def predict(self, features: np.ndarray) -> np.ndarray:
        if self.model is None:
            raise RuntimeError("KnnRegressor.predict called before fit")
        return np.asarray([knn_predict(self.model, row) for row in np.asarray(features)], dtype=np.float64)


@dataclass
class MlpRegressor:
    """ReLU network with a linear output, trained on mean squared error with Adam."""

    hidden: Sequence[int] = (256, 128)
    train: TrainConfig = field(default_factory=TrainConfig)
    net: Optional[DenseNet] = None
    losses: List[float] = field(default_factory=list)

    def fit(self, features: np.ndarray, labels: Sequence[float]) -> "MlpRegressor":
        x = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
        if x.shape[0] == 0:
            raise EmptyTrainingSetError("no training compounds")
        if x.shape[0] != y.shape[0]:
            raise LengthMismatchError("features and labels differ in length", {"features": x.shape[0], "labels": y.shape[0]})
        cfg = self.train
        rng = np.random.default_rng(cfg.seed)
        # output bias starts at the label mean
        self.net = DenseNet.build([x.shape[1], *self.hidden, 1], rng, hidden=Activation.RELU)
        self.net.layers[-1].bias[:] = float(y.mean())
        optimizer = Adam(self.net.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
        self.losses = []
        n = x.shape[0]
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            rate = cfg.learning_rate_at(epoch)
            total = 0.0
            for start in range(0, n, cfg.batch_size):
                batch = order[start : start + cfg.batch_size]
                out, cache = self.net.logits(x[batch])
                residual = out - y[batch]
                loss = float(np.mean(residual**2))
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch, loss)
                grads, _ = self.net.backward(cache, 2.0 * residual / len(batch))
                optimizer.step(DenseNet.flatten_grads(grads), rate)
                total += loss * len(batch)
            self.losses.append(total / n)
            logger.debug("mlp epoch %d mse %.6f", epoch, self.losses[-1])
        return self

    def predict(self, features: np.ndarray) -> np.ndarray:
        if self.net is None:
            raise RuntimeError("MlpRegressor.predict called before fit")
        return self.net.forward(np.asarray(features, dtype=np.float64)).reshape(-1)

    def feature_extractor(self) -> DenseNet:
        if self.net is None:
            raise RuntimeError("MlpRegressor.feature_extractor called before fit")
        return extract_nfp(self.net)

    def to_dict(self) -> Dict[str, Any]:
        if self.net is None:
            raise RuntimeError("cannot serialise an unfitted MlpRegressor")
        return {"kind": "mlp", "net": self.net.to_dict()}


def qsar_ac_binary(q_i: float, q_j: float, t: AcThresholds) -> AcLabel:
    "NonAC when the predicted difference is at most ``d_crit``."
    return AcLabel.AC if abs(q_i - q_j) > t.d_crit else AcLabel.NON_AC


def qsar_ac_ternary(q_i: float, q_j: float, t: AcThresholds) -> AcLabel:
    difference = abs(q_i - q_j)
    if difference <= t.lower:
        return AcLabel.NON_AC
    if difference >= t.upper:
        return AcLabel.AC
    return AcLabel.HALF_AC


def qsar_pd(q_i: float, q_j: float) -> PdLabel:
    "Right when the first compound is predicted no more active than the second."
    return PdLabel.LEFT if q_i > q_j else PdLabel.RIGHT


def inter_mode_inputs(
    mmp: Mmp,
    predicted: Sequence[float],
    known: Sequence[float],
    in_train: Sequence[bool],
) -> Tuple[float, float]:
    """
    Activities fed to the pair rules for one MMP.

    A compound from the training set contributes its measured activity, a test
    compound its prediction. Train-train pairs are never evaluated.
    """
    left, right = bool(in_train[mmp.i]), bool(in_train[mmp.j])
    if left and right:
        raise SplitRoutingError("both compounds of the pair are training compounds", {"i": mmp.i, "j": mmp.j})
    q_i = float(known[mmp.i]) if left else float(predicted[mmp.i])
    q_j = float(known[mmp.j]) if right else float(predicted[mmp.j])
    return q_i, q_j

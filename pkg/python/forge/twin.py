"""
Twin network for activity-cliff (AC) and potency-direction (PD) prediction.

Both compounds of a pair pass through one shared featuriser. The AC head
sees the componentwise maximum of the two embeddings, so its output does not
depend on pair order. The PD head sees their difference through an odd
network, so swapping the pair turns p into 1 - p.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, log_softmax, softmax

from forge.config import TrainConfig
from forge.exceptions import EmptyTrainingSetError, LengthMismatchError, TrainingDivergedError, WidthMismatchError
from forge.neural import Activation, Adam, DenseNet, Terminal

logger = logging.getLogger("forge.twin")


@dataclass(frozen=True)
class ClassWeights:
    """Loss weights: ``ac`` is indexed by AC class (AC, HalfAC, NonAC)."""

    ac: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    pd: float = 1.0


def class_weights(n_ac: int, n_half: int, n_non: int, n_mmp: Optional[int] = None) -> ClassWeights:
    """Give every AC class the same total weight; PD weight is the mean per-pair AC weight."""
    if min(n_ac, n_half, n_non) < 1:
        raise ValueError("every AC class needs at least one training pair")
    total = n_ac + n_half + n_non
    if n_mmp is None:
        n_mmp = total
    if n_mmp != total:
        raise LengthMismatchError("n_mmp must equal the sum of class counts", {"n_mmp": n_mmp, "sum": total})
    w_ac = n_non / n_ac
    w_half = n_non / n_half
    w_pd = (n_ac * w_ac + n_half * w_half + n_non) / n_mmp
    return ClassWeights((w_ac, w_half, 1.0), w_pd)


@dataclass
class TwinModel:
    featuriser: DenseNet
    ac_head: DenseNet
    pd_head: DenseNet

    def __post_init__(self) -> None:
        width = self.featuriser.output_width
        if self.ac_head.input_width != width or self.pd_head.input_width != width:
            raise WidthMismatchError(
                "head input widths must equal the embedding width",
                {"embedding": width, "ac": self.ac_head.input_width, "pd": self.pd_head.input_width},
            )
        if self.ac_head.output_width != 3 or self.ac_head.terminal != Terminal.SOFTMAX3:
            raise ValueError("the AC head must end in a 3-way softmax")
        if self.pd_head.output_width != 1 or self.pd_head.terminal != Terminal.SIGMOID:
            raise ValueError("the PD head must end in a single sigmoid")
        if not self.pd_head.is_odd:
            raise ValueError("the PD head must be an odd network")

    @classmethod
    def build(
        cls,
        input_width: int,
        embedding: Sequence[int],
        ac_hidden: Sequence[int],
        pd_hidden: Sequence[int],
        rng: np.random.Generator,
    ) -> "TwinModel":
        sizes = [input_width, *embedding]
        featuriser = DenseNet.build(sizes, rng, hidden=Activation.RELU, output=Activation.RELU)
        width = sizes[-1]
        ac_head = DenseNet.build([width, *ac_hidden, 3], rng, terminal=Terminal.SOFTMAX3)
        pd_head = DenseNet.odd([width, *pd_hidden, 1], rng)
        return cls(featuriser, ac_head, pd_head)

    @property
    def input_width(self) -> int:
        return self.featuriser.input_width

    def parameters(self) -> List[np.ndarray]:
        return self.featuriser.parameters() + self.ac_head.parameters() + self.pd_head.parameters()

    def copy(self) -> "TwinModel":
        return TwinModel(self.featuriser.copy(), self.ac_head.copy(), self.pd_head.copy())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "twin",
            "featuriser": self.featuriser.to_dict(),
            "ac_head": self.ac_head.to_dict(),
            "pd_head": self.pd_head.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TwinModel":
        return cls(
            DenseNet.from_dict(data["featuriser"]),
            DenseNet.from_dict(data["ac_head"]),
            DenseNet.from_dict(data["pd_head"]),
        )


def _pair_batch(model: TwinModel, fp_i: np.ndarray, fp_j: np.ndarray) -> Tuple[np.ndarray, np.ndarray, bool]:
    x_i = np.asarray(fp_i, dtype=np.float64)
    x_j = np.asarray(fp_j, dtype=np.float64)
    if x_i.shape != x_j.shape:
        raise WidthMismatchError("pair inputs differ in shape", {"i": x_i.shape, "j": x_j.shape})
    single = x_i.ndim == 1
    if single:
        x_i, x_j = x_i[None, :], x_j[None, :]
    if x_i.shape[1] != model.input_width:
        raise WidthMismatchError(
            "fingerprint width does not match the model", {"expected": model.input_width, "got": x_i.shape[1]}
        )
    return x_i, x_j, single


def twin_forward(model: TwinModel, fp_i: np.ndarray, fp_j: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """AC probabilities (..., 3) and PD probability (...,) for one pair or a batch of pairs."""
    x_i, x_j, single = _pair_batch(model, fp_i, fp_j)
    e_i = model.featuriser.forward(x_i)
    e_j = model.featuriser.forward(x_j)
    ac = model.ac_head.forward(np.maximum(e_i, e_j))
    pd = model.pd_head.forward(e_i - e_j)[:, 0]
    if single:
        return ac[0], pd[0]
    return ac, pd


predict = twin_forward


def _labels(ac_label: Any, pd_label: Any, n: int) -> Tuple[np.ndarray, np.ndarray]:
    ac = np.asarray(ac_label)
    # one-hot rows (n, 3), or a single one-hot vector for one pair
    if ac.ndim == 2 and ac.shape[1] == 3:
        ac = np.argmax(ac, axis=1)
    elif ac.ndim == 1 and n == 1 and ac.shape[0] == 3:
        ac = np.atleast_1d(np.argmax(ac))
    ac = np.asarray(ac, dtype=np.int64).reshape(-1)
    pd = np.asarray(pd_label, dtype=np.float64).reshape(-1)
    if ac.shape[0] != n or pd.shape[0] != n:
        raise LengthMismatchError("label count does not match pair count", {"pairs": n, "ac": ac.shape[0], "pd": pd.shape[0]})
    return ac, pd


def _weighted_loss(
    z_ac: np.ndarray, z_pd: np.ndarray, ac_y: np.ndarray, pd_y: np.ndarray, w_ac: np.ndarray, w_pd: float
) -> float:
    # from logits: stays finite when a sigmoid or softmax saturates
    ce = -log_softmax(z_ac, axis=1)[np.arange(len(ac_y)), ac_y]
    bce = pd_y * np.logaddexp(0.0, -z_pd) + (1.0 - pd_y) * np.logaddexp(0.0, z_pd)
    return float(np.mean(w_ac * ce + w_pd * bce))


def twin_loss_and_grads(
    model: TwinModel,
    fp_i: np.ndarray,
    fp_j: np.ndarray,
    ac_label: Any,
    pd_label: Any,
    weights: ClassWeights,
) -> Tuple[float, List[np.ndarray]]:
    """
    Mean weighted loss over the batch and its gradient for every parameter.

    The loss per pair is ``w_ac[y] * CE(y, ac) + w_pd * BCE(pd_label, pd)``
    with natural logarithms. Gradients are ordered like ``model.parameters()``.
    """
    x_i, x_j, _ = _pair_batch(model, fp_i, fp_j)
    n = x_i.shape[0]
    ac_y, pd_y = _labels(ac_label, pd_label, n)

    e_i, cache_i = model.featuriser.logits(x_i)
    e_j, cache_j = model.featuriser.logits(x_j)
    take_i = e_i >= e_j
    z_ac, cache_ac = model.ac_head.logits(np.maximum(e_i, e_j))
    z_pd, cache_pd = model.pd_head.logits(e_i - e_j)
    z_pd = z_pd[:, 0]
    w_ac = np.asarray(weights.ac, dtype=np.float64)[ac_y]
    loss = _weighted_loss(z_ac, z_pd, ac_y, pd_y, w_ac, weights.pd)

    one_hot = np.zeros_like(z_ac)
    one_hot[np.arange(n), ac_y] = 1.0
    g_ac = (w_ac[:, None] * (softmax(z_ac, axis=1) - one_hot)) / n
    g_pd = (weights.pd * (expit(z_pd) - pd_y) / n)[:, None]

    grads_ac, g_max = model.ac_head.backward(cache_ac, g_ac)
    grads_pd, g_diff = model.pd_head.backward(cache_pd, g_pd)
    g_i = np.where(take_i, g_max, 0.0) + g_diff
    g_j = np.where(take_i, 0.0, g_max) - g_diff
    grads_fi, _ = model.featuriser.backward(cache_i, g_i)
    grads_fj, _ = model.featuriser.backward(cache_j, g_j)

    featuriser = [a + b for a, b in zip(DenseNet.flatten_grads(grads_fi), DenseNet.flatten_grads(grads_fj))]
    return loss, featuriser + DenseNet.flatten_grads(grads_ac) + DenseNet.flatten_grads(grads_pd)


def twin_loss(
    model: TwinModel,
    fp_i: np.ndarray,
    fp_j: np.ndarray,
    ac_label: Any,
    pd_label: Any,
    weights: ClassWeights = ClassWeights(),
) -> float:
    """Mean weighted loss over the batch; swapping every pair and flipping PD labels leaves it unchanged."""
    x_i, x_j, _ = _pair_batch(model, fp_i, fp_j)
    ac_y, pd_y = _labels(ac_label, pd_label, x_i.shape[0])
    e_i, _ = model.featuriser.logits(x_i)
    e_j, _ = model.featuriser.logits(x_j)
    z_ac, _ = model.ac_head.logits(np.maximum(e_i, e_j))
    z_pd, _ = model.pd_head.logits(e_i - e_j)
    w_ac = np.asarray(weights.ac, dtype=np.float64)[ac_y]
    return _weighted_loss(z_ac, z_pd[:, 0], ac_y, pd_y, w_ac, weights.pd)


@dataclass
class TrainResult:
    model: TwinModel
    losses: List[float] = field(default_factory=list)


def train_twin(
    model: TwinModel,
    x_i: np.ndarray,
    x_j: np.ndarray,
    ac_label: Any,
    pd_label: Any,
    weights: ClassWeights,
    cfg: TrainConfig,
) -> TrainResult:
    """
    Mini-batch Adam on a copy of ``model``; the input model is left untouched.

    Batches are reshuffled every epoch from a generator seeded with ``cfg.seed``.
    """
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    n = x_i.shape[0]
    if n == 0:
        raise EmptyTrainingSetError("no training pairs")
    ac_y, pd_y = _labels(ac_label, pd_label, n)
    trained = model.copy()
    optimizer = Adam(trained.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.default_rng(cfg.seed)
    losses: List[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        rate = cfg.learning_rate_at(epoch)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = twin_loss_and_grads(
                trained, x_i[batch], x_j[batch], ac_y[batch], pd_y[batch], weights
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            optimizer.step(grads, rate)
            total += loss * len(batch)
        losses.append(total / n)
        logger.debug("twin epoch %d loss %.6f lr %.2e", epoch, losses[-1], rate)
    return TrainResult(trained, losses)

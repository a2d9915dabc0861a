import numpy as np
import pytest

from forge.config import AcThresholds, TrainConfig
from forge.exceptions import EmptyTrainingSetError, LengthMismatchError, SplitRoutingError
from forge.mmp import AcLabel, Mmp, PdLabel
from forge.predictors import (
    KnnModel,
    KnnRegressor,
    MlpRegressor,
    inter_mode_inputs,
    knn_predict,
    minkowski_distances,
    qsar_ac_binary,
    qsar_ac_ternary,
    qsar_pd,
)

LINE = np.array([[0.0], [1.0], [2.0], [10.0]])
LINE_LABELS = np.array([0.0, 1.0, 2.0, 10.0])
THRESHOLDS = AcThresholds()


def test_minkowski_distances():
    points = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert minkowski_distances(points, np.zeros(2), 2.0).tolist() == pytest.approx([0.0, 5.0])
    assert minkowski_distances(points, np.zeros(2), 1.0).tolist() == pytest.approx([0.0, 7.0])


def test_knn_uniform_average():
    m = KnnModel(LINE, LINE_LABELS, k=2, minkowski_p=1.0)
    assert knn_predict(m, [0.4]) == pytest.approx(0.5)
    assert knn_predict(m, [9.0]) == pytest.approx(6.0)


def test_knn_ties_go_to_lower_index():
    m = KnnModel(LINE, LINE_LABELS, k=1, minkowski_p=1.0)
    assert knn_predict(m, [1.5]) == pytest.approx(1.0)


def test_knn_inverse_distance():
    m = KnnModel(LINE, LINE_LABELS, k=2, minkowski_p=1.0, weighting="distance")
    assert knn_predict(m, [0.25]) == pytest.approx(0.25)
    assert knn_predict(m, [1.0]) == pytest.approx(1.0)


def test_knn_model_validation():
    with pytest.raises(ValueError):
        KnnModel(LINE, LINE_LABELS, k=5)
    with pytest.raises(ValueError):
        KnnModel(LINE, LINE_LABELS, k=1, minkowski_p=0.5)
    with pytest.raises(EmptyTrainingSetError):
        KnnModel(np.zeros((0, 1)), np.zeros(0), k=1)
    with pytest.raises(LengthMismatchError):
        KnnModel(LINE, LINE_LABELS[:3], k=1)


def test_knn_regressor_clamps_k():
    reg = KnnRegressor(k=10, minkowski_p=1.0).fit(LINE, LINE_LABELS)
    assert reg.model.k == 4
    assert reg.predict(np.array([[0.0], [5.0]])).tolist() == pytest.approx([3.25, 3.25])
    with pytest.raises(RuntimeError):
        KnnRegressor().predict(LINE)


def test_knn_probabilities_for_binary_labels():
    features = np.array([[0.0], [0.1], [0.2], [5.0], [5.1]])
    reg = KnnRegressor(k=3, minkowski_p=1.0).fit(features, [0, 0, 1, 1, 1])
    probabilities = reg.predict(np.array([[0.05], [5.05]]))
    assert probabilities.tolist() == pytest.approx([1 / 3, 1.0])


def test_mlp_fits_a_linear_target(rng):
    x = rng.normal(size=(64, 3))
    y = x @ np.array([1.0, -2.0, 0.5]) + 3.0
    mlp = MlpRegressor(hidden=(16,), train=TrainConfig(learning_rate=1e-2, batch_size=16, epochs=150, seed=0))
    mlp.fit(x, y)
    assert mlp.losses[-1] < 0.1 * mlp.losses[0]
    assert mlp.predict(x).shape == (64,)
    assert mlp.feature_extractor().output_width == 16
    assert mlp.to_dict()["kind"] == "mlp"


def test_mlp_requires_fit_and_data():
    with pytest.raises(RuntimeError):
        MlpRegressor().predict(np.zeros((1, 3)))
    with pytest.raises(EmptyTrainingSetError):
        MlpRegressor().fit(np.zeros((0, 3)), [])
    with pytest.raises(LengthMismatchError):
        MlpRegressor().fit(np.zeros((2, 3)), [1.0])


@pytest.mark.parametrize(
    "q_i, q_j, expected",
    [(5.0, 6.5, AcLabel.NON_AC), (5.0, 6.6, AcLabel.AC), (7.0, 5.0, AcLabel.AC), (5.0, 5.0, AcLabel.NON_AC)],
)
def test_binary_pair_rule(q_i, q_j, expected):
    assert qsar_ac_binary(q_i, q_j, THRESHOLDS) == expected


@pytest.mark.parametrize(
    "q_i, q_j, expected",
    [
        (5.0, 6.0, AcLabel.NON_AC),
        (5.0, 6.5, AcLabel.HALF_AC),
        (5.0, 7.0, AcLabel.AC),
        (8.0, 5.0, AcLabel.AC),
    ],
)
def test_ternary_pair_rule(q_i, q_j, expected):
    assert qsar_ac_ternary(q_i, q_j, THRESHOLDS) == expected


def test_direction_rule():
    assert qsar_pd(7.0, 6.0) == PdLabel.LEFT
    assert qsar_pd(6.0, 7.0) == PdLabel.RIGHT
    assert qsar_pd(6.0, 6.0) == PdLabel.RIGHT


def test_inter_mode_inputs():
    pair = Mmp(0, 1, "[*]c1ccccc1", "[*]C", "[*]O", AcLabel.AC, PdLabel.RIGHT)
    predicted = [5.5, 6.5]
    known = [5.0, 7.0]
    assert inter_mode_inputs(pair, predicted, known, [True, False]) == (5.0, 6.5)
    assert inter_mode_inputs(pair, predicted, known, [False, True]) == (5.5, 7.0)
    assert inter_mode_inputs(pair, predicted, known, [False, False]) == (5.5, 6.5)
    with pytest.raises(SplitRoutingError):
        inter_mode_inputs(pair, predicted, known, [True, True])


def test_ternary_thresholds_partition_differences(rng):
    for _ in range(200):
        lower = float(rng.uniform(0.1, 2.0))
        upper = lower + float(rng.uniform(0.01, 2.0))
        t = AcThresholds(lower=lower, d_crit=(lower + upper) / 2, upper=upper)
        deltas = np.r_[0.0, lower, upper, np.nextafter(lower, np.inf), np.nextafter(upper, 0.0), rng.uniform(0, 5, 50)]
        for delta in deltas:
            q_i = float(rng.uniform(3, 9))
            label = qsar_ac_ternary(q_i + delta, q_i, t)
            difference = abs((q_i + delta) - q_i)
            expected = (
                AcLabel.NON_AC if difference <= lower else AcLabel.AC if difference >= upper else AcLabel.HALF_AC
            )
            assert label == expected
            assert qsar_ac_ternary(q_i, q_i + delta, t) == label


def test_knn_single_neighbour_reproduces_training_labels(rng):
    features = rng.integers(0, 2, size=(40, 16)).astype(float)
    features = np.unique(features, axis=0)
    labels = rng.uniform(4, 9, size=len(features))
    for p in (1.0, 2.0, 3.0):
        for weighting in ("uniform", "distance"):
            predicted = KnnRegressor(k=1, minkowski_p=p, weighting=weighting).fit(features, labels).predict(features)
            assert np.mean(np.abs(predicted - labels)) == 0.0

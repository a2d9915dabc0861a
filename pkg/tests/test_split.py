import numpy as np
import pytest

from forge.exceptions import BadKError
from forge.mmp import AcLabel, Mmp, PdLabel, find_mmps
from forge.smiles import parse_smiles
from forge.split import (
    MmpSet,
    build_split,
    random_kfold,
    repeated_cv,
    set_sizes,
    stratified_kfold,
)


def _pair(i, j, core):
    return Mmp(i, j, core, "[*]C", "[*]O", AcLabel.NON_AC, PdLabel.RIGHT)


HAND_MMPS = [
    _pair(0, 1, "A"),
    _pair(1, 3, "B"),
    _pair(3, 4, "A"),
    _pair(4, 5, "C"),
]


@pytest.fixture(scope="module")
def toy_mmps(toy_dataset):
    graphs = [parse_smiles(s) for s in toy_dataset.smiles]
    return find_mmps(graphs, toy_dataset.labels)


def test_random_kfold_partitions_indices():
    folds = random_kfold(10, 3, seed=4)
    assert [len(f) for f in folds] == [4, 3, 3]
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))
    assert all((np.diff(f) > 0).all() for f in folds)


def test_random_kfold_is_seeded():
    first = random_kfold(20, 4, seed=1)
    assert all((a == b).all() for a, b in zip(first, random_kfold(20, 4, seed=1)))
    assert any((a != b).any() for a, b in zip(first, random_kfold(20, 4, seed=2)))


@pytest.mark.parametrize("n, k", [(10, 1), (3, 4), (0, 2)])
def test_bad_k(n, k):
    with pytest.raises(BadKError):
        random_kfold(n, k, seed=0)


def test_stratified_kfold_balances_classes():
    labels = [0] * 6 + [1] * 4
    folds = stratified_kfold(labels, 2, seed=0)
    for fold in folds:
        values = [labels[i] for i in fold]
        assert values.count(0) == 3
        assert values.count(1) == 2


def test_build_split_routes_pairs():
    plan = build_split([0, 1, 2], [3, 4, 5], HAND_MMPS, seed=3, fold=1)
    assert plan.m_train == [0]
    assert plan.m_inter == [1]
    assert plan.m_test == [2, 3]
    assert plan.c_train == ["A", "B"]
    assert plan.m_cores == [3]
    assert plan.mmp_indices(MmpSet.CORES) == [3]
    assert set_sizes(plan) == {"train": 1, "inter": 1, "test": 2, "cores": 1}
    assert plan.train_mask(6).tolist() == [True, True, True, False, False, False]
    plan.verify(6, HAND_MMPS)


def test_verify_rejects_broken_plans():
    plan = build_split([0, 1, 2], [3, 4, 5], HAND_MMPS)
    with pytest.raises(ValueError):
        plan.model_copy(update={"m_cores": [2]}).verify(6, HAND_MMPS)
    with pytest.raises(ValueError):
        plan.model_copy(update={"d_test": [3, 4]}).verify(6, HAND_MMPS)
    with pytest.raises(ValueError):
        plan.model_copy(update={"m_train": [0, 1], "m_inter": []}).verify(6, HAND_MMPS)


def test_repeated_cv_plans(toy_dataset, toy_mmps):
    n = len(toy_dataset)
    plans = repeated_cv(n, toy_mmps, k=2, seeds=[0, 1, 2])
    assert [(p.seed, p.fold) for p in plans] == [(s, f) for s in (0, 1, 2) for f in (0, 1)]
    for plan in plans:
        plan.verify(n, toy_mmps)
    for seed in (0, 1, 2):
        tested = sorted(i for p in plans if p.seed == seed for i in p.d_test)
        assert tested == list(range(n))


def test_repeated_cv_with_stratification():
    labels = [0, 1] * 10
    plans = repeated_cv(20, [], k=5, seeds=[7], stratify=labels)
    for plan in plans:
        assert sorted(labels[i] for i in plan.d_test) == [0, 0, 1, 1]
        assert plan.m_train == plan.m_inter == plan.m_test == []


def _random_mmps(rng, n, count, cores="ABCDEFG"):
    pairs = set()
    while len(pairs) < count:
        i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
        pairs.add((i, j))
    return [_pair(i, j, str(rng.choice(list(cores)))) for i, j in sorted(pairs)]


def test_plans_hold_on_random_datasets(rng):
    for _ in range(100):
        n = int(rng.integers(4, 40))
        mmps = _random_mmps(rng, n, int(rng.integers(0, n * (n - 1) // 2 // 2 + 1)))
        k = int(rng.integers(2, min(n, 5) + 1))
        for plan in repeated_cv(n, mmps, k=k, seeds=[int(rng.integers(0, 1000))]):
            plan.verify(n, mmps)
            train, test = set(plan.d_train), set(plan.d_test)
            assert not train & test
            routed = plan.m_train + plan.m_inter + plan.m_test
            assert sorted(routed) == list(range(len(mmps)))
            for index in plan.m_inter:
                assert (mmps[index].i in train) != (mmps[index].j in train)
            seen = {mmps[index].core for index in plan.m_train + plan.m_inter}
            assert set(plan.c_train) == seen
            assert plan.m_cores == [index for index in plan.m_test if mmps[index].core not in seen]


def test_two_fold_set_sizes_near_one_two_one(rng):
    n = 500
    mmps = _random_mmps(rng, n, 3000)
    totals = {"train": 0, "inter": 0, "test": 0}
    for seed in range(10):
        for plan in repeated_cv(n, mmps, k=2, seeds=[seed]):
            for key, size in set_sizes(plan).items():
                if key in totals:
                    totals[key] += size
    quarter = sum(totals.values()) / 4
    assert totals["train"] == pytest.approx(quarter, rel=0.2)
    assert totals["inter"] == pytest.approx(2 * quarter, rel=0.2)
    assert totals["test"] == pytest.approx(quarter, rel=0.2)

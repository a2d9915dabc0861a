"""
Pair-aware data splits under repeated k-fold cross-validation.

Each plan partitions the compounds into train/test and routes every MMP by
where its two compounds landed: both in train, one on each side (inter),
or both in test. Test MMPs whose core never appears among the train or
inter MMPs additionally form the ``cores`` set.
"""

import logging
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from forge.exceptions import BadKError
from forge.mmp import Mmp

logger = logging.getLogger("forge.split")


class MmpSet(str, Enum):
    TRAIN = "train"
    INTER = "inter"
    TEST = "test"
    CORES = "cores"


def _check_k(n: int, k: int) -> None:
    if k < 2 or n < k:
        raise BadKError(f"cannot build {k} folds from {n} compounds", {"n": n, "k": k})


def random_kfold(n: int, k: int, seed: int) -> List[np.ndarray]:
    """
    Shuffle ``range(n)`` with a seeded PCG64 generator and cut it into ``k`` folds.

    The first ``n % k`` folds hold one extra index. Each fold is returned sorted.
    """
    _check_k(n, k)
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(order, k)]


def stratified_kfold(labels: Sequence[int], k: int, seed: int) -> List[np.ndarray]:
    """Shuffle within each class, then deal the classes round-robin across folds."""
    labels = np.asarray(labels)
    _check_k(len(labels), k)
    rng = np.random.default_rng(seed)
    folds: List[List[int]] = [[] for _ in range(k)]
    cursor = 0
    for value in np.unique(labels):
        members = np.flatnonzero(labels == value)
        for index in rng.permutation(members):
            folds[cursor % k].append(int(index))
            cursor += 1
    return [np.sort(np.asarray(fold, dtype=np.int64)) for fold in folds]


class SplitPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int
    fold: int
    d_train: List[int]
    d_test: List[int]
    m_train: List[int]
    m_inter: List[int]
    m_test: List[int]
    m_cores: List[int]
    c_train: List[str]

    def mmp_indices(self, which: MmpSet) -> List[int]:
        return {
            MmpSet.TRAIN: self.m_train,
            MmpSet.INTER: self.m_inter,
            MmpSet.TEST: self.m_test,
            MmpSet.CORES: self.m_cores,
        }[MmpSet(which)]

    def train_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[self.d_train] = True
        return mask

    def verify(self, n: int, mmps: Sequence[Mmp]) -> None:
        """Raise ValueError if the plan violates any partition or routing rule."""
        train, test = set(self.d_train), set(self.d_test)
        if train & test or train | test != set(range(n)):
            raise ValueError("d_train and d_test must partition the compounds")
        routed = [set(self.m_train), set(self.m_inter), set(self.m_test)]
        if sum(len(s) for s in routed) != len(mmps) or set().union(*routed) != set(range(len(mmps))):
            raise ValueError("m_train, m_inter and m_test must partition the MMPs")
        cores = set(self.c_train)
        for index in self.m_cores:
            if index not in routed[2] or mmps[index].core in cores:
                raise ValueError(f"MMP {index} does not belong in m_cores")
        for index in self.m_train:
            if mmps[index].i not in train or mmps[index].j not in train:
                raise ValueError(f"MMP {index} is not a train-train pair")
        for index in self.m_test:
            if mmps[index].i not in test or mmps[index].j not in test:
                raise ValueError(f"MMP {index} is not a test-test pair")


def build_split(
    d_train: Sequence[int],
    d_test: Sequence[int],
    mmps: Sequence[Mmp],
    seed: int = 0,
    fold: int = 0,
) -> SplitPlan:
    train = set(int(i) for i in d_train)
    m_train: List[int] = []
    m_inter: List[int] = []
    m_test: List[int] = []
    for index, pair in enumerate(mmps):
        inside = (pair.i in train) + (pair.j in train)
        (m_test, m_inter, m_train)[inside].append(index)
    c_train = sorted({mmps[index].core for index in m_train + m_inter})
    known = set(c_train)
    m_cores = [index for index in m_test if mmps[index].core not in known]
    return SplitPlan(
        seed=seed,
        fold=fold,
        d_train=sorted(train),
        d_test=sorted(int(i) for i in d_test),
        m_train=m_train,
        m_inter=m_inter,
        m_test=m_test,
        m_cores=m_cores,
        c_train=c_train,
    )


def repeated_cv(
    n: int,
    mmps: Sequence[Mmp],
    k: int,
    seeds: Sequence[int],
    stratify: Optional[Sequence[int]] = None,
) -> List[SplitPlan]:
    """One plan per (seed, test fold), seeds in the given order."""
    plans: List[SplitPlan] = []
    for seed in seeds:
        folds = stratified_kfold(stratify, k, seed) if stratify is not None else random_kfold(n, k, seed)
        for fold, test in enumerate(folds):
            train = np.concatenate([f for position, f in enumerate(folds) if position != fold])
            plan = build_split(train.tolist(), test.tolist(), mmps, seed=seed, fold=fold)
            logger.debug(
                "seed %d fold %d: %d/%d compounds, MMPs train=%d inter=%d test=%d cores=%d",
                seed, fold, len(plan.d_train), len(plan.d_test),
                len(plan.m_train), len(plan.m_inter), len(plan.m_test), len(plan.m_cores),
            )
            plans.append(plan)
    return plans


def set_sizes(plan: SplitPlan) -> Dict[str, int]:
    return {which.value: len(plan.mmp_indices(which)) for which in MmpSet}

"""
Substructure pooling: turning identifier sets into fixed-length bit vectors.

Four methods are available:

- ``hash``: fold every identifier into ``id mod l``. Needs no training data.
- ``sort_slice``: one slot per identifier, keeping the ``l`` most frequent
  training substructures.
- ``filter``: drop rare, then non-closed, then label-independent substructures
  (chi-square test) until ``l`` remain.
- ``mim``: deduplicate substructures with identical support, then keep the
  ``l`` with highest mutual information with the (binarized) label.

The three vocabulary methods are collision-free: each slot holds one identifier.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveInt, PrivateAttr, model_validator

from forge.ecfp import FingerprintSet, Occurrence
from forge.exceptions import EmptyTrainingSetError, LengthMismatchError, MissingLabelsError
from forge.stats import binarize_labels, chi2_pvalues_columns, is_binary, mutual_information_columns

logger = logging.getLogger("forge.pooling")


class PoolingMethod(str, Enum):
    HASH = "hash"
    SORT_SLICE = "sort_slice"
    FILTER = "filter"
    MIM = "mim"


@dataclass
class FitContext:
    """Training compounds (and optionally their labels) a pooling method is fitted on."""

    train_fps: Sequence[FingerprintSet]
    labels: Optional[Sequence[float]] = None
    _supports: Dict[int, FrozenSet[int]] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.labels is not None and len(self.labels) != len(self.train_fps):
            raise LengthMismatchError(
                "labels and fingerprints differ in length",
                {"fingerprints": len(self.train_fps), "labels": len(self.labels)},
            )

    @property
    def n(self) -> int:
        return len(self.train_fps)

    @property
    def supports(self) -> Dict[int, FrozenSet[int]]:
        "Training compounds containing each identifier."
        if not self._supports:
            collected: Dict[int, Set[int]] = {}
            for compound, fp in enumerate(self.train_fps):
                for identifier in fp.ids:
                    collected.setdefault(identifier, set()).add(compound)
            self._supports = {k: frozenset(v) for k, v in collected.items()}
        return self._supports

    def frequency(self, identifier: int) -> int:
        return len(self.supports.get(identifier, ()))

    def binary_labels(self) -> np.ndarray:
        if self.labels is None:
            raise MissingLabelsError("this pooling method needs training labels")
        if is_binary(self.labels):
            return np.asarray(self.labels, dtype=np.int8)
        return binarize_labels(self.labels)

    def presence_matrix(self, ids: Sequence[int]) -> np.ndarray:
        column = {identifier: j for j, identifier in enumerate(ids)}
        matrix = np.zeros((self.n, len(ids)), dtype=np.int8)
        for identifier, j in column.items():
            for compound in self.supports[identifier]:
                matrix[compound, j] = 1
        return matrix


class PoolSpec(BaseModel):
    """A fitted pooling operator of dimension ``dim``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: PoolingMethod
    dim: PositiveInt
    slots: List[int] = []
    _index: Dict[int, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_slots(self) -> "PoolSpec":
        if self.method == PoolingMethod.HASH and self.slots:
            raise ValueError("hash pooling has no slots")
        if len(self.slots) > self.dim:
            raise ValueError(f"{len(self.slots)} slots do not fit in dimension {self.dim}")
        if len(set(self.slots)) != len(self.slots):
            raise ValueError("slots must be pairwise distinct")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._index = {identifier: slot for slot, identifier in enumerate(self.slots)}

    def transform(self, fp: Union[FingerprintSet, Iterable[int]]) -> np.ndarray:
        ids = fp.ids if isinstance(fp, FingerprintSet) else fp
        vector = np.zeros(self.dim, dtype=np.uint8)
        if self.method == PoolingMethod.HASH:
            for identifier in ids:
                vector[int(identifier) % self.dim] = 1
        else:
            for identifier in ids:
                slot = self._index.get(int(identifier))
                if slot is not None:
                    vector[slot] = 1
        return vector

    def transform_many(self, fps: Sequence[FingerprintSet]) -> np.ndarray:
        if not fps:
            return np.zeros((0, self.dim), dtype=np.uint8)
        return np.stack([self.transform(fp) for fp in fps])


def transform(spec: PoolSpec, fp: Union[FingerprintSet, Iterable[int]]) -> np.ndarray:
    return spec.transform(fp)


def fit_hash(l: int) -> PoolSpec:
    return PoolSpec(method=PoolingMethod.HASH, dim=l)


def _require_training(ctx: FitContext) -> None:
    if ctx.n == 0:
        raise EmptyTrainingSetError("no training compounds")


def fit_sort_and_slice(ctx: FitContext, l: int) -> PoolSpec:
    """Most frequent training substructures first; ties go to the larger identifier."""
    _require_training(ctx)
    ranked = sorted(ctx.supports, key=lambda i: (-ctx.frequency(i), -i))
    logger.debug("sort & slice: %d training substructures, keeping %d", len(ranked), min(l, len(ranked)))
    return PoolSpec(method=PoolingMethod.SORT_SLICE, dim=l, slots=ranked[:l])


def _strictly_inside(inner: Occurrence, outer: Occurrence) -> bool:
    return (
        inner.key != outer.key
        and set(inner.atom_set) <= set(outer.atom_set)
        and set(inner.bond_set) <= set(outer.bond_set)
    )


def _contains_everywhere(ctx: FitContext, outer: int, inner: int, support: FrozenSet[int]) -> bool:
    for compound in support:
        occurrences = ctx.train_fps[compound].occurrences
        found = occurrences.get(outer, ())
        nested = occurrences.get(inner, ())
        if not found or not nested:
            return False
        if not any(_strictly_inside(i, o) for o in found for i in nested):
            return False
    return True


def _closure_witnesses(ctx: FitContext, ids: Iterable[int]) -> Dict[int, Set[int]]:
    """For each id, the ids with the same support that it strictly contains in every compound."""
    by_support: Dict[FrozenSet[int], List[int]] = {}
    for identifier in ids:
        by_support.setdefault(ctx.supports[identifier], []).append(identifier)
    witnesses: Dict[int, Set[int]] = {}
    for support, group in by_support.items():
        if len(group) < 2:
            continue
        for outer in group:
            for inner in group:
                if inner != outer and _contains_everywhere(ctx, outer, inner, support):
                    witnesses.setdefault(outer, set()).add(inner)
    return witnesses


def fit_filter(ctx: FitContext, l: int) -> PoolSpec:
    """
    Filtering selection.

    1. drop substructures found in at most one training compound,
    2. drop non-closed substructures (a same-support substructure sits strictly
       inside them in every compound),
    3. drop the least label-dependent by chi-square p-value.

    Each step removes larger identifiers first and stops as soon as ``l``
    substructures remain.
    """
    _require_training(ctx)
    labels = ctx.binary_labels()
    kept: Set[int] = set(ctx.supports)

    for identifier in sorted(kept, reverse=True):
        if len(kept) <= l:
            break
        if ctx.frequency(identifier) <= 1:
            kept.discard(identifier)
    logger.debug("filter: %d substructures after dropping singletons", len(kept))

    if len(kept) > l:
        witnesses = _closure_witnesses(ctx, kept)
        for identifier in sorted(witnesses, reverse=True):
            if len(kept) <= l:
                break
            if witnesses[identifier] & kept:
                kept.discard(identifier)
        logger.debug("filter: %d substructures after dropping non-closed", len(kept))

    ids = sorted(kept)
    pvalues = chi2_pvalues_columns(labels, ctx.presence_matrix(ids)) if ids else np.zeros(0)
    ranked = [ids[j] for j in sorted(range(len(ids)), key=lambda j: (pvalues[j], ids[j]))]
    return PoolSpec(method=PoolingMethod.FILTER, dim=l, slots=ranked[:l])


def fit_mim(ctx: FitContext, l: int) -> PoolSpec:
    """Mutual-information maximisation over support-deduplicated substructures."""
    _require_training(ctx)
    labels = ctx.binary_labels()
    kept: Set[int] = set(ctx.supports)

    smallest: Dict[FrozenSet[int], int] = {}
    for identifier in sorted(kept):
        smallest.setdefault(ctx.supports[identifier], identifier)
    duplicates = sorted((i for i in kept if smallest[ctx.supports[i]] != i), reverse=True)
    for identifier in duplicates:
        if len(kept) <= l:
            break
        kept.discard(identifier)

    ids = sorted(kept)
    information = mutual_information_columns(labels, ctx.presence_matrix(ids)) if ids else np.zeros(0)
    ranked = [ids[j] for j in sorted(range(len(ids)), key=lambda j: (-information[j], -ids[j]))]
    return PoolSpec(method=PoolingMethod.MIM, dim=l, slots=ranked[:l])


def fit_pooling(method: PoolingMethod, ctx: FitContext, l: int) -> PoolSpec:
    """Dispatch to the fitting routine for ``method``."""
    method = PoolingMethod(method)
    if method == PoolingMethod.HASH:
        return fit_hash(l)
    if method == PoolingMethod.SORT_SLICE:
        return fit_sort_and_slice(ctx, l)
    if method == PoolingMethod.FILTER:
        return fit_filter(ctx, l)
    return fit_mim(ctx, l)

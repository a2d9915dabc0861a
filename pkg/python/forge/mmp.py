"""
Matched molecular pairs and activity-cliff labels.

Pairs come from single cuts of exocyclic single bonds. The larger fragment
is the core, the smaller one the variable part; both carry a ``[*]``
attachment atom. Activities are in p-units (negative decadic logarithm of
the measured value).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from itertools import combinations
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from forge.exceptions import LengthMismatchError, ParseError
from forge.molgraph import WILDCARD, Atom, Bond, BondOrder, MolGraph, canonical_smiles, perceive_rings
from forge.smiles import parse_smiles

logger = logging.getLogger("forge.mmp")

MAX_VARIABLE_HEAVY = 13
CORE_TO_VARIABLE_RATIO = 2
MAX_VARIABLE_SIZE_DIFFERENCE = 8
AC_MIN_DIFFERENCE = 2.0
NON_AC_MAX_DIFFERENCE = 1.0


class AcLabel(IntEnum):
    """Activity-cliff class; the value is the class index of its one-hot code."""

    AC = 0
    HALF_AC = 1
    NON_AC = 2

    @property
    def tag(self) -> str:
        return ("AC", "HalfAC", "NonAC")[self.value]

    @property
    def one_hot(self) -> Tuple[int, int, int]:
        code = [0, 0, 0]
        code[self.value] = 1
        return tuple(code)  # type: ignore[return-value]

    @classmethod
    def from_tag(cls, tag: str) -> "AcLabel":
        return {"AC": cls.AC, "HalfAC": cls.HALF_AC, "NonAC": cls.NON_AC}[tag]


class PdLabel(IntEnum):
    RIGHT = 0
    LEFT = 1


@dataclass(frozen=True)
class CutFragmentation:
    core: str
    variable: str
    core_heavy: int
    var_heavy: int


@dataclass(frozen=True)
class Mmp:
    """An ordered compound pair (i < j) sharing ``core``."""

    i: int
    j: int
    core: str
    var_i: str
    var_j: str
    ac_label: AcLabel
    pd_label: PdLabel

    def __post_init__(self) -> None:
        if self.i >= self.j:
            raise ValueError("MMPs are stored with i < j")


def label_ac(act_i: float, act_j: float) -> AcLabel:
    difference = abs(act_i - act_j)
    if difference >= AC_MIN_DIFFERENCE:
        return AcLabel.AC
    if difference <= NON_AC_MAX_DIFFERENCE:
        return AcLabel.NON_AC
    return AcLabel.HALF_AC


def label_pd(act_i: float, act_j: float) -> PdLabel:
    "Left when the first compound is more active; exact ties count as Right."
    return PdLabel.LEFT if act_i > act_j else PdLabel.RIGHT


def _fragment(g: MolGraph, members: Sequence[int], attach: int) -> MolGraph:
    index = {old: new for new, old in enumerate(sorted(members))}
    atoms = [g.atoms[old] for old in sorted(members)]
    bonds = [
        Bond(index[b.begin], index[b.end], b.order)
        for b in g.bonds
        if b.begin in index and b.end in index
    ]
    atoms.append(Atom(WILDCARD))
    bonds.append(Bond(index[attach], len(atoms) - 1, BondOrder.SINGLE))
    return perceive_rings(MolGraph(tuple(atoms), tuple(bonds)))


def _heavy(g: MolGraph, members: Sequence[int]) -> int:
    return sum(1 for a in members if g.atoms[a].is_heavy)


def enumerate_single_cuts(g: MolGraph) -> List[CutFragmentation]:
    """All size-admissible fragmentations of ``g`` at one exocyclic single bond."""
    if not g.rings_perceived:
        g = perceive_rings(g)
    graph = g.to_networkx()
    found: List[CutFragmentation] = []
    for index, bond in enumerate(g.bonds):
        if g.ring_bond[index] or bond.order != BondOrder.SINGLE:
            continue
        if WILDCARD in (g.atoms[bond.begin].element, g.atoms[bond.end].element):
            continue
        graph.remove_edge(bond.begin, bond.end)
        left = sorted(nx.node_connected_component(graph, bond.begin))
        right = sorted(nx.node_connected_component(graph, bond.end))
        graph.add_edge(bond.begin, bond.end)

        sides = [(_heavy(g, left), left, bond.begin), (_heavy(g, right), right, bond.end)]
        sides.sort(key=lambda side: side[0], reverse=True)
        (core_heavy, core_atoms, core_attach), (var_heavy, var_atoms, var_attach) = sides
        if var_heavy > MAX_VARIABLE_HEAVY or core_heavy < CORE_TO_VARIABLE_RATIO * var_heavy:
            continue
        found.append(
            CutFragmentation(
                core=canonical_smiles(_fragment(g, core_atoms, core_attach)),
                variable=canonical_smiles(_fragment(g, var_atoms, var_attach)),
                core_heavy=core_heavy,
                var_heavy=var_heavy,
            )
        )
    return found


def find_mmps(dataset: Sequence[MolGraph], activities: Sequence[float]) -> List[Mmp]:
    """
    Index every compound's fragmentations by core and pair compounds sharing one.

    A pair found under several cores keeps the core with the most heavy atoms,
    then the lexicographically smallest core string.
    """
    if len(dataset) != len(activities):
        raise LengthMismatchError(
            "dataset and activities differ in length",
            {"compounds": len(dataset), "activities": len(activities)},
        )
    index: Dict[str, Dict[int, List[CutFragmentation]]] = {}
    for compound, g in enumerate(dataset):
        for cut in sorted(set(enumerate_single_cuts(g)), key=lambda c: (c.core, c.variable)):
            index.setdefault(cut.core, {}).setdefault(compound, []).append(cut)

    best: Dict[Tuple[int, int], Tuple[Tuple[int, str, str, str], CutFragmentation, CutFragmentation]] = {}
    for core, members in index.items():
        for i, j in combinations(sorted(members), 2):
            for cut_i in members[i]:
                for cut_j in members[j]:
                    if cut_i.variable == cut_j.variable:
                        continue
                    if abs(cut_i.var_heavy - cut_j.var_heavy) > MAX_VARIABLE_SIZE_DIFFERENCE:
                        continue
                    rank = (-cut_i.core_heavy, core, cut_i.variable, cut_j.variable)
                    current = best.get((i, j))
                    if current is None or rank < current[0]:
                        best[(i, j)] = (rank, cut_i, cut_j)

    pairs = []
    for (i, j), (rank, cut_i, cut_j) in sorted(best.items()):
        pairs.append(
            Mmp(
                i=i,
                j=j,
                core=rank[1],
                var_i=cut_i.variable,
                var_j=cut_j.variable,
                ac_label=label_ac(activities[i], activities[j]),
                pd_label=label_pd(activities[i], activities[j]),
            )
        )
    logger.info("found %d matched molecular pairs among %d compounds", len(pairs), len(dataset))
    return pairs


def label_counts(mmps: Sequence[Mmp]) -> Dict[AcLabel, int]:
    counts = {label: 0 for label in AcLabel}
    for pair in mmps:
        counts[pair.ac_label] += 1
    return counts


def to_pactivity(values: Sequence[float], molar_scale: float = 1e-9) -> np.ndarray:
    """Convert raw activities (e.g. nM with ``molar_scale=1e-9``) to p-units."""
    raw = np.asarray(values, dtype=np.float64)
    if np.any(~np.isfinite(raw)) or np.any(raw <= 0):
        raise ValueError("raw activities must be finite and positive")
    return -np.log10(raw * molar_scale)


ActivityUnits = Literal["raw", "p", "binary"]


@dataclass
class DroppedRecord:
    row: int
    smiles: str
    reason: str


@dataclass
class CleanedRecord:
    smiles: str
    canonical: str
    activity: float
    rows: List[int]
    graph: MolGraph = field(repr=False, compare=False)
    record_id: Optional[str] = None


@dataclass
class CleaningReport:
    records: List[CleanedRecord]
    dropped: List[DroppedRecord]

    @property
    def activities(self) -> List[float]:
        return [record.activity for record in self.records]

    @property
    def graphs(self) -> List[MolGraph]:
        return [record.graph for record in self.records]


def _merge(values: List[float], units: ActivityUnits) -> Optional[float]:
    if len(values) == 1:
        return values[0]
    if units == "raw":
        if max(values) <= 10 * min(values):
            return float(math.exp(np.mean(np.log(values))))
        return None
    if units == "binary":
        return values[0] if len(set(values)) == 1 else None
    if max(values) - min(values) <= 1.0:
        return float(np.mean(values))
    return None


def clean_dataset(
    records: Sequence[Tuple[str, float]],
    units: ActivityUnits = "p",
    ids: Optional[Sequence[str]] = None,
) -> CleaningReport:
    """
    Parse, deduplicate and unify a list of (SMILES, activity) records.

    Duplicates are found by canonical SMILES. Raw activities within one order
    of magnitude merge to their geometric mean, p-unit activities within one
    log unit to their arithmetic mean, binary labels only when they agree.
    Other duplicate groups are dropped. Per-record failures are logged and
    reported, never raised.
    """
    dropped: List[DroppedRecord] = []
    groups: Dict[str, List[Tuple[int, str, float, MolGraph]]] = {}
    for row, (smiles, activity) in enumerate(records):
        try:
            graph = parse_smiles(smiles)
        except ParseError as exc:
            dropped.append(DroppedRecord(row, smiles, exc.kind.value))
            logger.warning("dropping row %d (%s): %s", row, smiles, exc.kind.value)
            continue
        if activity is None or not math.isfinite(activity) or (units == "raw" and activity <= 0):
            dropped.append(DroppedRecord(row, smiles, "InvalidActivity"))
            logger.warning("dropping row %d (%s): invalid activity %r", row, smiles, activity)
            continue
        groups.setdefault(canonical_smiles(graph), []).append((row, smiles, float(activity), graph))

    cleaned: List[CleanedRecord] = []
    for canonical, members in groups.items():
        merged = _merge([m[2] for m in members], units)
        rows = [m[0] for m in members]
        if merged is None:
            for row, smiles, _, _ in members:
                dropped.append(DroppedRecord(row, smiles, "InconsistentDuplicates"))
            logger.warning("dropping duplicate group %s: activities disagree (rows %s)", canonical, rows)
            continue
        first = members[0]
        cleaned.append(
            CleanedRecord(
                smiles=first[1],
                canonical=canonical,
                activity=merged,
                rows=rows,
                graph=first[3],
                record_id=ids[first[0]] if ids is not None else None,
            )
        )
    logger.info("cleaning kept %d of %d records", len(cleaned), len(records))
    return CleaningReport(cleaned, dropped)


"""
Extended-connectivity substructure enumeration.

Identifiers are 32-bit FNV-1a hashes. They are stored as integers in
0..2**32-1; the conventional 1..2**32 numbering is the stored value plus one
and never needs to be materialised.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from forge.molgraph import (
    MolGraph,
    Stereo,
    pharmacophoric_invariant,
    perceive_rings,
    standard_invariant,
)

logger = logging.getLogger("forge.ecfp")

FNV_OFFSET = 2166136261
FNV_PRIME = 16777619
MAX_RADIUS = 10
_U32 = 0xFFFFFFFF


class AtomInvariants(str, Enum):
    STANDARD = "standard"
    PHARMACOPHORIC = "pharmacophoric"


class EnumerationConfig(BaseModel):
    """How circular substructures are enumerated."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    radius: int = Field(default=2, ge=0, le=MAX_RADIUS)
    invariants: AtomInvariants = AtomInvariants.STANDARD
    use_chirality: bool = False


def hash32(seq: Sequence[int]) -> int:
    """FNV-1a over the little-endian 4-byte encoding of each integer."""
    if len(seq) == 0:
        raise ValueError("hash32 needs at least one integer")
    state = FNV_OFFSET
    for value in seq:
        if not 0 <= value <= _U32:
            raise ValueError(f"{value} is not an unsigned 32-bit integer")
        for byte in int(value).to_bytes(4, "little"):
            state = ((state ^ byte) * FNV_PRIME) & _U32
    return state


@dataclass(frozen=True)
class Occurrence:
    """Where one identifier was found: a circular subgraph around ``center_atom``."""

    center_atom: int
    radius: int
    bond_set: Tuple[int, ...]
    atom_set: Tuple[int, ...]

    @property
    def key(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        return self.atom_set, self.bond_set


@dataclass(frozen=True)
class FingerprintSet:
    """Binary ECFP of one molecule: its identifier set plus where each id occurs."""

    ids: FrozenSet[int]
    occurrences: Dict[int, Tuple[Occurrence, ...]] = field(default_factory=dict, compare=False)

    @classmethod
    def from_ids(cls, ids: Iterable[int]) -> "FingerprintSet":
        "Build a set without occurrence information (e.g. read back from JSONL)."
        return cls(frozenset(int(i) for i in ids))

    @property
    def has_occurrences(self) -> bool:
        return bool(self.occurrences)

    def sorted_ids(self) -> List[int]:
        return sorted(self.ids)

    def __contains__(self, item: object) -> bool:
        return item in self.ids

    def __iter__(self) -> Iterator[int]:
        return iter(self.sorted_ids())

    def __len__(self) -> int:
        return len(self.ids)


def _atom_invariant(g: MolGraph, index: int, cfg: EnumerationConfig) -> Tuple[int, ...]:
    if cfg.invariants == AtomInvariants.PHARMACOPHORIC:
        values = pharmacophoric_invariant(g, index)
    else:
        values = standard_invariant(g, index)
    if cfg.use_chirality:
        stereo = g.atoms[index].stereo
        code = 0 if stereo is None else (1 if stereo == Stereo.CCW else 2)
        values = (*values, code)
    return values


def initial_identifiers(g: MolGraph, cfg: EnumerationConfig) -> List[int]:
    """Radius-0 identifier of each atom."""
    if not g.rings_perceived:
        g = perceive_rings(g)
    return [hash32(_atom_invariant(g, index, cfg)) for index in range(g.num_atoms)]


def _raw_entries(g: MolGraph, cfg: EnumerationConfig) -> List[Tuple[int, Occurrence]]:
    if not g.rings_perceived:
        g = perceive_rings(g)
    current = initial_identifiers(g, cfg)
    atom_sets = [frozenset((a,)) for a in range(g.num_atoms)]
    bond_sets: List[FrozenSet[int]] = [frozenset() for _ in range(g.num_atoms)]
    entries = [
        (current[a], Occurrence(a, 0, (), (a,))) for a in range(g.num_atoms)
    ]
    for radius in range(1, cfg.radius + 1):
        updated: List[int] = []
        next_atoms: List[FrozenSet[int]] = []
        next_bonds: List[FrozenSet[int]] = []
        for atom in range(g.num_atoms):
            pairs = sorted((int(g.bonds[b].order), current[n]) for n, b in g.neighbors[atom])
            seq = [radius, current[atom]]
            for order, neighbor_id in pairs:
                seq.extend((order, neighbor_id))
            updated.append(hash32(seq))
            atoms = set(atom_sets[atom])
            bonds = set(bond_sets[atom])
            for neighbor, bond in g.neighbors[atom]:
                atoms |= atom_sets[neighbor]
                bonds |= bond_sets[neighbor]
                bonds.add(bond)
            next_atoms.append(frozenset(atoms))
            next_bonds.append(frozenset(bonds))
        current, atom_sets, bond_sets = updated, next_atoms, next_bonds
        for atom in range(g.num_atoms):
            entries.append(
                (
                    current[atom],
                    Occurrence(atom, radius, tuple(sorted(bond_sets[atom])), tuple(sorted(atom_sets[atom]))),
                )
            )
    return entries


def _collect(entries: Iterable[Tuple[int, Occurrence]]) -> FingerprintSet:
    grouped: Dict[int, List[Occurrence]] = {}
    for identifier, occurrence in entries:
        grouped.setdefault(identifier, [])
        if occurrence not in grouped[identifier]:
            grouped[identifier].append(occurrence)
    occurrences = {
        identifier: tuple(sorted(found, key=lambda o: (o.radius, o.center_atom)))
        for identifier, found in grouped.items()
    }
    return FingerprintSet(frozenset(occurrences), occurrences)


def remove_structural_duplicates(fp: FingerprintSet) -> FingerprintSet:
    """
    Keep one identifier per distinct circular subgraph.

    Occurrences covering the same atoms and bonds are duplicates; the one with
    the smaller radius wins, then the smaller identifier. An identifier is
    dropped once none of its occurrences survive.
    """
    if not fp.has_occurrences:
        return fp
    best: Dict[tuple, Tuple[int, int, int]] = {}
    for identifier, found in fp.occurrences.items():
        for occurrence in found:
            rank = (occurrence.radius, identifier, occurrence.center_atom)
            if occurrence.key not in best or rank < best[occurrence.key]:
                best[occurrence.key] = rank
    winners = {(rank[1], key, rank[2]) for key, rank in best.items()}
    kept = (
        (identifier, occurrence)
        for identifier, found in fp.occurrences.items()
        for occurrence in found
        if (identifier, occurrence.key, occurrence.center_atom) in winners
    )
    return _collect(kept)


def enumerate_substructures(
    g: MolGraph, cfg: EnumerationConfig, remove_duplicates: bool = True
) -> FingerprintSet:
    """All circular substructure identifiers of ``g`` up to ``cfg.radius``."""
    fp = _collect(_raw_entries(g, cfg))
    return remove_structural_duplicates(fp) if remove_duplicates else fp


def _enumerate_one(args: Tuple[MolGraph, EnumerationConfig]) -> FingerprintSet:
    return enumerate_substructures(*args)


def enumerate_many(
    graphs: Sequence[MolGraph], cfg: EnumerationConfig, workers: int = 1
) -> List[FingerprintSet]:
    """Fingerprint a list of molecules, optionally across worker processes; order is preserved."""
    if workers <= 1 or len(graphs) < 2 * workers:
        return [enumerate_substructures(g, cfg) for g in graphs]
    logger.debug("fingerprinting %d molecules on %d workers", len(graphs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_enumerate_one, [(g, cfg) for g in graphs], chunksize=16))

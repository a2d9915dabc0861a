"""
Molecular graph model for forge.
Hydrogen-depleted graphs with typed atoms and bonds, ring perception,
standard and pharmacophoric atom invariants, canonical ranking and
canonical SMILES output.
"""

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx

WILDCARD = 0

_SYMBOLS = (
    "* H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl "
    "Mc Lv Ts Og"
).split()

ELEMENT_SYMBOLS: Tuple[str, ...] = tuple(_SYMBOLS)
ATOMIC_NUMBERS: Dict[str, int] = {symbol: number for number, symbol in enumerate(_SYMBOLS)}

# Lowest standard valence first; implicit hydrogens fill up to the first one
# that accommodates the explicit bond-order sum.
ORGANIC_VALENCES: Dict[int, Tuple[int, ...]] = {
    5: (3,),
    6: (4,),
    7: (3, 5),
    8: (2,),
    15: (3, 5),
    16: (2, 4, 6),
    9: (1,),
    17: (1,),
    35: (1,),
    53: (1,),
}

HALOGENS = frozenset({9, 17, 35, 53})


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


class Stereo(str, Enum):
    CW = "@@"
    CCW = "@"


@dataclass(frozen=True)
class Atom:
    """One heavy atom (or the wildcard attachment point, element 0)."""

    element: int
    formal_charge: int = 0
    h_count: int = 0
    aromatic: bool = False
    isotope: Optional[int] = None
    stereo: Optional[Stereo] = None

    def __post_init__(self) -> None:
        if not 0 <= self.element < len(ELEMENT_SYMBOLS):
            raise ValueError(f"unknown atomic number {self.element}")
        if not 0 <= self.h_count <= 8:
            raise ValueError(f"hydrogen count {self.h_count} outside 0..8")
        if abs(self.formal_charge) > 4:
            raise ValueError(f"formal charge {self.formal_charge} outside -4..4")
        if self.isotope is not None and self.isotope < 0:
            raise ValueError("isotope must be non-negative")

    @property
    def symbol(self) -> str:
        return ELEMENT_SYMBOLS[self.element]

    @property
    def is_heavy(self) -> bool:
        return self.element > 1


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE
    stereo: Optional[str] = None

    def __post_init__(self) -> None:
        if self.begin == self.end:
            raise ValueError("a bond needs two distinct atoms")

    @property
    def endpoints(self) -> FrozenSet[int]:
        return frozenset((self.begin, self.end))

    def other(self, atom: int) -> int:
        return self.end if atom == self.begin else self.begin


@dataclass(frozen=True)
class MolGraph:
    """
    Connected, undirected, hydrogen-depleted molecular graph.

    Instances are immutable; operations that change flags or numbering
    return new graphs. ``ring_atom`` and ``ring_bond`` are empty until
    ``perceive_rings`` has run (``parse_smiles`` always runs it).
    """

    atoms: Tuple[Atom, ...]
    bonds: Tuple[Bond, ...]
    ring_atom: Tuple[bool, ...] = field(default=())
    ring_bond: Tuple[bool, ...] = field(default=())

    def __post_init__(self) -> None:
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.begin < len(self.atoms) and 0 <= bond.end < len(self.atoms)):
                raise ValueError(f"bond {bond} references a missing atom")
            if bond.endpoints in seen:
                raise ValueError(f"duplicate bond between {bond.begin} and {bond.end}")
            seen.add(bond.endpoints)

    @cached_property
    def neighbors(self) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        "Per atom, the (neighbour atom, bond index) pairs."
        table: List[List[Tuple[int, int]]] = [[] for _ in self.atoms]
        for index, bond in enumerate(self.bonds):
            table[bond.begin].append((bond.end, index))
            table[bond.end].append((bond.begin, index))
        return tuple(tuple(entries) for entries in table)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    @property
    def heavy_atom_count(self) -> int:
        return sum(1 for atom in self.atoms if atom.is_heavy)

    @property
    def rings_perceived(self) -> bool:
        return len(self.ring_bond) == len(self.bonds) and len(self.ring_atom) == len(self.atoms)

    def degree(self, atom: int) -> int:
        return len(self.neighbors[atom])

    def bond_between(self, a: int, b: int) -> Optional[int]:
        for neighbor, bond_index in self.neighbors[a]:
            if neighbor == b:
                return bond_index
        return None

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.atoms)))
        for index, bond in enumerate(self.bonds):
            graph.add_edge(bond.begin, bond.end, index=index, order=int(bond.order))
        return graph

    def is_connected(self) -> bool:
        if not self.atoms:
            return False
        return nx.is_connected(self.to_networkx())


def implicit_hydrogens(element: int, aromatic: bool, bond_orders: Sequence[int]) -> Optional[int]:
    """
    Implicit hydrogen count of an organic-subset atom, or None on valence overflow.

    Aromatic bonds count as 1 towards the bond-order sum and an aromatic atom
    contributes one more for its pi bond. Aromatic atoms only use their lowest
    valence and never go below zero hydrogens.
    """
    valences = ORGANIC_VALENCES.get(element)
    if valences is None:
        return None
    total = sum(1 if order == BondOrder.AROMATIC else int(order) for order in bond_orders)
    if aromatic:
        if total > valences[0]:
            return None
        return max(0, valences[0] - total - 1)
    for valence in valences:
        if total <= valence:
            return valence - total
    return None


def perceive_rings(g: MolGraph) -> MolGraph:
    """Flag ring bonds (every bond that is not a bridge) and the atoms they touch."""
    bridges = {frozenset(edge) for edge in nx.bridges(g.to_networkx())}
    ring_bond = tuple(bond.endpoints not in bridges for bond in g.bonds)
    ring_atom = [False] * len(g.atoms)
    for bond, in_ring in zip(g.bonds, ring_bond):
        if in_ring:
            ring_atom[bond.begin] = True
            ring_atom[bond.end] = True
    return replace(g, ring_atom=tuple(ring_atom), ring_bond=ring_bond)


def _ensure_rings(g: MolGraph) -> MolGraph:
    return g if g.rings_perceived else perceive_rings(g)


def standard_invariant(
    g: MolGraph, atom_index: int, use_isotopes: bool = False
) -> Tuple[int, int, int, int, int, int]:
    """
    (atomic number, heavy-atom degree, hydrogens, formal charge + 4, isotope, in ring).

    Isotopes are reported as 0 unless ``use_isotopes`` is set.
    """
    g = _ensure_rings(g)
    atom = g.atoms[atom_index]
    isotope = (atom.isotope or 0) if use_isotopes else 0
    return (
        atom.element,
        g.degree(atom_index),
        atom.h_count,
        atom.formal_charge + 4,
        isotope,
        int(g.ring_atom[atom_index]),
    )


def _is_acid_oxygen(g: MolGraph, atom_index: int) -> bool:
    atom = g.atoms[atom_index]
    if atom.element not in (8, 16) or atom.h_count < 1:
        return False
    for neighbor, bond_index in g.neighbors[atom_index]:
        if g.bonds[bond_index].order != BondOrder.SINGLE:
            continue
        for partner, partner_bond in g.neighbors[neighbor]:
            if partner == atom_index:
                continue
            if (
                g.atoms[partner].element in (8, 16)
                and g.bonds[partner_bond].order == BondOrder.DOUBLE
            ):
                return True
    return False


def pharmacophoric_invariant(g: MolGraph, atom_index: int) -> Tuple[int, int, int, int, int, int]:
    """
    Binary flags (acceptor, donor, negatively ionisable, positively ionisable,
    aromatic, halogen) under the simplified rules documented in docs/fingerprints.md.
    """
    atom = g.atoms[atom_index]
    polar = atom.element in (7, 8)
    acceptor = polar and atom.formal_charge <= 0
    donor = polar and atom.h_count >= 1
    negative = _is_acid_oxygen(g, atom_index)
    positive = (
        atom.element == 7
        and not atom.aromatic
        and atom.formal_charge >= 0
        and all(g.bonds[b].order == BondOrder.SINGLE for _, b in g.neighbors[atom_index])
    )
    return (
        int(acceptor),
        int(donor),
        int(negative),
        int(positive),
        int(atom.aromatic),
        int(atom.element in HALOGENS),
    )


def _dense_ranks(keys: Sequence[tuple]) -> List[int]:
    order = {key: rank for rank, key in enumerate(sorted(set(keys)))}
    return [order[key] for key in keys]


def _refine(g: MolGraph, ranks: List[int]) -> List[int]:
    while True:
        keys = [
            (
                ranks[atom],
                tuple(
                    sorted((int(g.bonds[b].order), ranks[neighbor]) for neighbor, b in g.neighbors[atom])
                ),
            )
            for atom in range(g.num_atoms)
        ]
        refined = _dense_ranks(keys)
        if len(set(refined)) == len(set(ranks)):
            return refined
        ranks = refined


def canonical_ranks(g: MolGraph) -> Tuple[int, ...]:
    """
    Bijective canonical rank per atom.

    Atoms start from their invariant tuple and are refined by the sorted
    (bond order, neighbour rank) lists until the partition is stable. Remaining
    ties are broken by promoting the lowest-indexed atom of the lowest tied
    class and refining again.
    """
    g = _ensure_rings(g)
    initial = [
        (
            atom.element,
            g.degree(index),
            atom.h_count,
            atom.formal_charge + 4,
            atom.isotope or 0,
            int(atom.aromatic),
            int(g.ring_atom[index]),
        )
        for index, atom in enumerate(g.atoms)
    ]
    ranks = _refine(g, _dense_ranks(initial))
    while len(set(ranks)) < len(ranks):
        counts: Dict[int, int] = {}
        for rank in ranks:
            counts[rank] = counts.get(rank, 0) + 1
        tied = min(rank for rank, count in counts.items() if count > 1)
        chosen = min(index for index, rank in enumerate(ranks) if rank == tied)
        split = [(rank, 0 if index == chosen or rank != tied else 1) for index, rank in enumerate(ranks)]
        ranks = _refine(g, _dense_ranks(split))
    return tuple(ranks)


def canonical_smiles(g: MolGraph) -> str:
    """Canonical SMILES string; stereo markers are not written."""
    from forge.smiles import write_smiles

    return write_smiles(g, canonical_ranks(g))


def permute_atoms(g: MolGraph, perm: Sequence[int]) -> MolGraph:
    """Renumber atoms so that old atom ``i`` becomes atom ``perm[i]``."""
    if sorted(perm) != list(range(g.num_atoms)):
        raise ValueError("perm must be a permutation of the atom indices")
    atoms: List[Optional[Atom]] = [None] * g.num_atoms
    for old, new in enumerate(perm):
        atoms[new] = g.atoms[old]
    bonds = tuple(replace(b, begin=perm[b.begin], end=perm[b.end]) for b in g.bonds)
    ring_atom: Tuple[bool, ...] = ()
    if g.rings_perceived:
        flags = [False] * g.num_atoms
        for old, new in enumerate(perm):
            flags[new] = g.ring_atom[old]
        ring_atom = tuple(flags)
    return MolGraph(tuple(atoms), bonds, ring_atom, g.ring_bond)  # type: ignore[arg-type]

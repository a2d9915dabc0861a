"""
SMILES reading and writing for forge.

Accepted grammar: organic subset (B C N O P S F Cl Br I), aromatic atoms
(b c n o p s), bracket atoms ``[<isotope><symbol><chirality><Hn><charge><:class>]``,
bonds ``- = # : / \\``, branches, ring closures ``1-9`` and ``%nn``.
Aromaticity is taken verbatim from the notation; nothing is kekulized or perceived.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from forge.exceptions import ParseError, ParseErrorKind
from forge.molgraph import (
    ATOMIC_NUMBERS,
    ORGANIC_VALENCES,
    WILDCARD,
    Atom,
    Bond,
    BondOrder,
    MolGraph,
    Stereo,
    implicit_hydrogens,
    perceive_rings,
)

_ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
_AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
_AROMATIC_BRACKET = ("se", "as", "b", "c", "n", "o", "p", "s")
_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}


@dataclass
class _PendingAtom:
    atom: Atom
    position: int
    organic: bool


@dataclass
class _OpenRing:
    atom: int
    bond_symbol: Optional[str]
    position: int


def _fail(kind: ParseErrorKind, position: int, detail: Optional[str] = None) -> ParseError:
    return ParseError(kind, position, detail)


def _bond_order(symbol: Optional[str], left: Atom, right: Atom) -> BondOrder:
    if symbol is None:
        return BondOrder.AROMATIC if left.aromatic and right.aromatic else BondOrder.SINGLE
    return _BOND_SYMBOLS[symbol]


def _bond_stereo(symbol: Optional[str]) -> Optional[str]:
    return symbol if symbol in ("/", "\\") else None


def _read_digits(text: str, start: int) -> Tuple[Optional[int], int]:
    end = start
    while end < len(text) and text[end].isdigit():
        end += 1
    if end == start:
        return None, start
    return int(text[start:end]), end


def _parse_bracket(text: str, start: int, allow_wildcard: bool) -> Tuple[Atom, int]:
    """Parse ``[...]`` beginning at ``start``; returns the atom and the index after ']'."""
    close = text.find("]", start)
    if close == -1:
        raise _fail(ParseErrorKind.BAD_BRACKET_ATOM, start, "missing ']'")
    body = text[start + 1 : close]
    pos = 0
    isotope, pos = _read_digits(body, pos)

    aromatic = False
    if body[pos : pos + 1] == "*":
        if not allow_wildcard:
            raise _fail(ParseErrorKind.UNKNOWN_SYMBOL, start + 1 + pos, "wildcard atom")
        element = WILDCARD
        pos += 1
    else:
        for symbol in _AROMATIC_BRACKET:
            if body.startswith(symbol, pos):
                element = ATOMIC_NUMBERS[symbol.capitalize()]
                aromatic = True
                pos += len(symbol)
                break
        else:
            two = body[pos : pos + 2]
            one = body[pos : pos + 1]
            if len(two) == 2 and two[1].islower() and two in ATOMIC_NUMBERS:
                element = ATOMIC_NUMBERS[two]
                pos += 2
            elif one.isupper() and one in ATOMIC_NUMBERS:
                element = ATOMIC_NUMBERS[one]
                pos += 1
            else:
                raise _fail(ParseErrorKind.BAD_BRACKET_ATOM, start, f"bad element in [{body}]")

    stereo: Optional[Stereo] = None
    if body.startswith("@@", pos):
        stereo = Stereo.CW
        pos += 2
    elif body.startswith("@", pos):
        stereo = Stereo.CCW
        pos += 1

    h_count = 0
    if body.startswith("H", pos):
        pos += 1
        count, pos = _read_digits(body, pos)
        h_count = 1 if count is None else count

    charge = 0
    if pos < len(body) and body[pos] in "+-":
        sign = 1 if body[pos] == "+" else -1
        pos += 1
        count, pos = _read_digits(body, pos)
        if count is not None:
            charge = sign * count
        else:
            charge = sign
            while pos < len(body) and body[pos] == ("+" if sign > 0 else "-"):
                charge += sign
                pos += 1

    if body.startswith(":", pos):
        klass, after = _read_digits(body, pos + 1)
        if klass is None:
            raise _fail(ParseErrorKind.BAD_BRACKET_ATOM, start, "empty atom class")
        pos = after

    if pos != len(body):
        raise _fail(ParseErrorKind.BAD_BRACKET_ATOM, start, f"unexpected text in [{body}]")
    try:
        atom = Atom(element, charge, h_count, aromatic, isotope, stereo)
    except ValueError as exc:
        raise _fail(ParseErrorKind.BAD_BRACKET_ATOM, start, str(exc)) from exc
    return atom, close + 1


def parse_smiles(text: str, allow_wildcard: bool = False) -> MolGraph:
    """
    Parse one single-fragment SMILES string into a ring-perceived MolGraph.

    Raises ParseError with the 0-based position of the offending character.
    ``allow_wildcard`` admits ``*`` atoms, used internally for MMP fragments.
    """
    text = text.rstrip()
    offset = len(text) - len(text.lstrip())
    if offset == len(text):
        raise _fail(ParseErrorKind.EMPTY_INPUT, 0)

    atoms: List[_PendingAtom] = []
    bonds: List[Bond] = []
    pairs: Dict[frozenset, int] = {}
    branch_stack: List[Tuple[int, int]] = []
    open_rings: Dict[int, _OpenRing] = {}
    prev: Optional[int] = None
    pending_bond: Optional[Tuple[str, int]] = None
    branch_empty = False

    def add_bond(a: int, b: int, symbol: Optional[str], position: int, kind: ParseErrorKind) -> None:
        key = frozenset((a, b))
        if a == b or key in pairs:
            raise _fail(kind, position, "duplicate or self bond")
        order = _bond_order(symbol, atoms[a].atom, atoms[b].atom)
        pairs[key] = len(bonds)
        bonds.append(Bond(a, b, order, _bond_stereo(symbol)))

    def add_atom(atom: Atom, position: int, organic: bool) -> None:
        nonlocal prev, pending_bond, branch_empty
        atoms.append(_PendingAtom(atom, position, organic))
        index = len(atoms) - 1
        if prev is not None:
            symbol = pending_bond[0] if pending_bond else None
            add_bond(prev, index, symbol, position, ParseErrorKind.UNKNOWN_SYMBOL)
        pending_bond = None
        branch_empty = False
        prev = index

    i = offset
    while i < len(text):
        ch = text[i]
        pos = i
        if ch == "[":
            atom, after = _parse_bracket(text, i, allow_wildcard)
            add_atom(atom, i, organic=False)
            i = after
            continue
        if ch == "*":
            if not allow_wildcard:
                raise _fail(ParseErrorKind.UNKNOWN_SYMBOL, pos, "wildcard atom")
            add_atom(Atom(WILDCARD), i, organic=False)
            i += 1
            continue
        matched = False
        for symbol in _ORGANIC:
            if text.startswith(symbol, i):
                add_atom(Atom(ATOMIC_NUMBERS[symbol]), i, organic=True)
                i += len(symbol)
                matched = True
                break
        if matched:
            continue
        if ch in _AROMATIC_ORGANIC:
            add_atom(Atom(ATOMIC_NUMBERS[ch.upper()], aromatic=True), i, organic=True)
            i += 1
            continue
        if ch in _BOND_SYMBOLS:
            if prev is None or pending_bond is not None:
                raise _fail(ParseErrorKind.UNKNOWN_SYMBOL, pos, f"misplaced bond '{ch}'")
            pending_bond = (ch, pos)
            i += 1
            continue
        if ch == "(":
            if prev is None or pending_bond is not None or branch_empty:
                raise _fail(ParseErrorKind.UNBALANCED_PARENTHESIS, pos, "branch without a preceding atom")
            branch_stack.append((prev, pos))
            branch_empty = True
            i += 1
            continue
        if ch == ")":
            if not branch_stack or branch_empty or pending_bond is not None:
                raise _fail(ParseErrorKind.UNBALANCED_PARENTHESIS, pos)
            prev, _ = branch_stack.pop()
            i += 1
            continue
        if ch == ".":
            raise _fail(ParseErrorKind.DISCONNECTED_PARTS, pos)
        if ch.isdigit() or ch == "%":
            if ch == "%":
                digits = text[i + 1 : i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise _fail(ParseErrorKind.UNCLOSED_RING, pos, "bad %nn ring label")
                label, width = int(digits), 3
            else:
                label, width = int(ch), 1
            if prev is None or branch_empty:
                raise _fail(ParseErrorKind.UNCLOSED_RING, pos, "ring label without an atom")
            symbol = pending_bond[0] if pending_bond else None
            if label in open_rings:
                opened = open_rings.pop(label)
                if symbol and opened.bond_symbol and symbol != opened.bond_symbol:
                    raise _fail(ParseErrorKind.UNCLOSED_RING, pos, "conflicting ring bond symbols")
                add_bond(opened.atom, prev, symbol or opened.bond_symbol, pos, ParseErrorKind.UNCLOSED_RING)
            else:
                open_rings[label] = _OpenRing(prev, symbol, pos)
            pending_bond = None
            i += width
            continue
        raise _fail(ParseErrorKind.UNKNOWN_SYMBOL, pos, f"unexpected character {ch!r}")

    if branch_stack:
        raise _fail(ParseErrorKind.UNBALANCED_PARENTHESIS, branch_stack[-1][1])
    if open_rings:
        first = min(open_rings.values(), key=lambda ring: ring.position)
        raise _fail(ParseErrorKind.UNCLOSED_RING, first.position)
    if pending_bond is not None:
        raise _fail(ParseErrorKind.UNKNOWN_SYMBOL, pending_bond[1], "dangling bond")

    orders: List[List[int]] = [[] for _ in atoms]
    for bond in bonds:
        orders[bond.begin].append(bond.order)
        orders[bond.end].append(bond.order)
    final: List[Atom] = []
    for index, pending in enumerate(atoms):
        atom = pending.atom
        if pending.organic:
            h_count = implicit_hydrogens(atom.element, atom.aromatic, orders[index])
            if h_count is None:
                raise _fail(ParseErrorKind.VALENCE_OVERFLOW, pending.position)
            atom = Atom(atom.element, 0, h_count, atom.aromatic)
        final.append(atom)
    return perceive_rings(MolGraph(tuple(final), tuple(bonds)))


def _bond_symbol(g: MolGraph, bond_index: int) -> str:
    bond = g.bonds[bond_index]
    both_aromatic = g.atoms[bond.begin].aromatic and g.atoms[bond.end].aromatic
    if bond.order == BondOrder.DOUBLE:
        return "="
    if bond.order == BondOrder.TRIPLE:
        return "#"
    if bond.order == BondOrder.AROMATIC:
        return "" if both_aromatic else ":"
    return "-" if both_aromatic else ""


def _atom_token(g: MolGraph, index: int) -> str:
    atom = g.atoms[index]
    if atom.element == WILDCARD:
        return "[*]"
    symbol = atom.symbol.lower() if atom.aromatic else atom.symbol
    organic = atom.element in ORGANIC_VALENCES and (
        not atom.aromatic or symbol in _AROMATIC_ORGANIC
    )
    if organic and atom.formal_charge == 0 and atom.isotope is None:
        orders = [g.bonds[b].order for _, b in g.neighbors[index]]
        if implicit_hydrogens(atom.element, atom.aromatic, orders) == atom.h_count:
            return symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if atom.h_count:
        parts.append("H" if atom.h_count == 1 else f"H{atom.h_count}")
    if atom.formal_charge:
        sign = "+" if atom.formal_charge > 0 else "-"
        magnitude = abs(atom.formal_charge)
        parts.append(sign if magnitude == 1 else f"{sign}{magnitude}")
    parts.append("]")
    return "".join(parts)


def _ring_label(label: int) -> str:
    return str(label) if label < 10 else f"%{label:02d}"


def write_smiles(g: MolGraph, ranks: Optional[Sequence[int]] = None) -> str:
    """
    Write ``g`` as SMILES by depth-first traversal.

    The walk starts at the lowest-ranked atom and visits neighbours in rank
    order; with ``canonical_ranks`` this yields the canonical string. Stereo
    markers are not written.
    """
    n = g.num_atoms
    if n == 0:
        raise ValueError("cannot write an empty graph")
    rank = list(ranks) if ranks is not None else list(range(n))
    if len(rank) != n:
        raise ValueError("ranks must have one entry per atom")

    def ordered(atom: int) -> List[Tuple[int, int]]:
        return sorted(g.neighbors[atom], key=lambda entry: rank[entry[0]])

    start = min(range(n), key=lambda atom: rank[atom])
    visited = [False] * n
    used = set()
    children: List[List[Tuple[int, int]]] = [[] for _ in range(n)]
    ring_open: List[List[int]] = [[] for _ in range(n)]
    ring_close: List[List[int]] = [[] for _ in range(n)]

    visited[start] = True
    stack = [(start, iter(ordered(start)))]
    while stack:
        atom, pending = stack[-1]
        for neighbor, bond_index in pending:
            if bond_index in used:
                continue
            used.add(bond_index)
            if visited[neighbor]:
                ring_open[neighbor].append(bond_index)
                ring_close[atom].append(bond_index)
                continue
            visited[neighbor] = True
            children[atom].append((neighbor, bond_index))
            stack.append((neighbor, iter(ordered(neighbor))))
            break
        else:
            stack.pop()

    if not all(visited):
        raise ValueError("graph is not connected")

    labels: Dict[int, int] = {}
    out: List[str] = []
    # atoms (int) still to write, interleaved with literal tokens (str)
    todo: List[Union[int, str]] = [start]
    while todo:
        item = todo.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        atom = item
        out.append(_atom_token(g, atom))
        for bond_index in ring_close[atom]:
            out.append(_ring_label(labels.pop(bond_index)))
        for bond_index in ring_open[atom]:
            taken = set(labels.values())
            label = next(candidate for candidate in range(1, 100) if candidate not in taken)
            labels[bond_index] = label
            out.append(_bond_symbol(g, bond_index) + _ring_label(label))
        branches: List[Union[int, str]] = []
        for position, (child, bond_index) in enumerate(children[atom]):
            last = position == len(children[atom]) - 1
            if last:
                branches += [_bond_symbol(g, bond_index), child]
            else:
                branches += ["(", _bond_symbol(g, bond_index), child, ")"]
        todo.extend(reversed(branches))
    return "".join(out)


def random_smiles(g: MolGraph, rng: np.random.Generator) -> str:
    """A valid, usually non-canonical SMILES for ``g`` from a random atom ranking."""
    return write_smiles(g, [int(r) for r in rng.permutation(g.num_atoms)])


def canonicalize(text: str) -> str:
    "Parse and re-emit as canonical SMILES."
    from forge.molgraph import canonical_smiles

    return canonical_smiles(parse_smiles(text))
